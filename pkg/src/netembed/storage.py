"""Model blobs (npz + JSON sidecar) and plain-text embedding files."""
from __future__ import annotations

import json
from pathlib import Path
from typing import Sequence

import numpy as np

FORMAT_VERSION = 1
BLOB = "model.npz"
META = "model.json"


def save_model(directory: str | Path, kind: str, arrays: dict[str, np.ndarray], meta: dict) -> None:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    with open(directory / BLOB, "wb") as fh:
        np.savez(fh, **{k: np.asarray(v) for k, v in sorted(arrays.items())})
    record = {"format_version": FORMAT_VERSION, "kind": kind, **meta}
    (directory / META).write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")


def load_model(directory: str | Path) -> tuple[str, dict[str, np.ndarray], dict]:
    directory = Path(directory)
    meta = json.loads((directory / META).read_text())
    if meta.get("format_version") != FORMAT_VERSION:
        raise ValueError(f"unsupported model format version {meta.get('format_version')!r}")
    with np.load(directory / BLOB, allow_pickle=False) as z:
        arrays = {k: z[k] for k in z.files}
    return meta["kind"], arrays, meta


def format_row(values) -> str:
    return " ".join(repr(float(x)) for x in values)


def write_embeddings(path: str | Path, labels: Sequence[str], matrix: np.ndarray,
                     prefix: Sequence[str] | None = None) -> None:
    """One line per node: ``[prefix] id v1 ... vd``."""
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    with open(path, "w", encoding="utf-8") as fh:
        for i, lab in enumerate(labels):
            head = f"{prefix[i]} {lab}" if prefix is not None else str(lab)
            fh.write(f"{head} {format_row(matrix[i])}\n")


def read_embeddings(path: str | Path, skip_fields: int = 0) -> tuple[list[str], np.ndarray]:
    """Inverse of ``write_embeddings``; ``skip_fields`` drops leading columns (e.g. type)."""
    labels, rows = [], []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            tok = raw.split()
            if not tok:
                continue
            tok = tok[skip_fields:]
            try:
                rows.append([float(x) for x in tok[1:]])
            except ValueError:
                raise ValueError(f"{path}:{lineno}: non-numeric embedding value") from None
            labels.append(tok[0])
    if rows and len({len(r) for r in rows}) != 1:
        raise ValueError(f"{path}: rows have differing widths")
    return labels, np.array(rows, dtype=np.float64).reshape(len(rows), -1)
