"""Run configuration: JSON file plus ``--set key=value`` overrides.

Schema::

    {
      "model": "sdne" | "drne" | "dhne" | "dvne" | "depthlgp",
      "inputs": {"graph": path, "weighted": bool,             # sdne, drne, dvne, depthlgp
                 "hyperedges": path, "types": path,           # dhne
                 "embeddings": path, "skip_fields": int},     # depthlgp
      "hyper": {...model hyperparameters...},
      "seed": int,
      "output_dir": path
    }

Relative input paths resolve against the config file's directory.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .depthlgp import DepthLgpConfig
from .dhne import DhneConfig
from .drne import DrneConfig
from .dvne import DvneConfig
from .sdne import SdneConfig

MODEL_CONFIGS = {
    "sdne": SdneConfig,
    "drne": DrneConfig,
    "dhne": DhneConfig,
    "dvne": DvneConfig,
    "depthlgp": DepthLgpConfig,
}
# loss weights have no safe universal default, so runs must state them
REQUIRED_HYPER = {
    "sdne": ("alpha", "nu", "beta"),
    "drne": ("lam",),
    "dhne": ("alpha",),
    "dvne": ("alpha",),
    "depthlgp": (),
}
REQUIRED_INPUTS = {
    "sdne": ("graph",),
    "drne": ("graph",),
    "dhne": ("hyperedges", "types"),
    "dvne": ("graph",),
    "depthlgp": ("graph", "embeddings"),
}
INPUT_KEYS = {"graph", "weighted", "hyperedges", "types", "embeddings", "skip_fields"}
PATH_KEYS = {"graph", "hyperedges", "types", "embeddings"}
TOP_KEYS = {"model", "inputs", "hyper", "seed", "output_dir"}


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    model: str
    inputs: dict
    hyper: dict = field(default_factory=dict)
    seed: int = 0
    output_dir: str = "runs"

    def model_config(self):
        return MODEL_CONFIGS[self.model](**self.hyper, seed=self.seed)

    def resolved(self) -> dict:
        """Every value that influences the outputs, defaults filled in."""
        return {"model": self.model, "inputs": dict(sorted(self.inputs.items())),
                "hyper": asdict(self.model_config()), "seed": self.seed}

    def config_hash(self) -> str:
        blob = json.dumps(self.resolved(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:12]

    def write_snapshot(self, directory: Path) -> Path:
        path = Path(directory) / "resolved_config.json"
        record = {**self.resolved(), "config_hash": self.config_hash()}
        path.write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
        return path


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def apply_overrides(raw: dict, overrides) -> dict:
    """``a.b=value`` sets ``raw["a"]["b"]``; values parse as JSON when possible."""
    for item in overrides or ():
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not of the form key=value")
        key, value = item.split("=", 1)
        parts = key.split(".")
        node = raw
        for p in parts[:-1]:
            node = node.setdefault(p, {})
            if not isinstance(node, dict):
                raise ConfigError(f"override {key!r} descends into a non-object")
        node[parts[-1]] = _parse_value(value)
    return raw


def validate(raw: dict, base: Path | None = None) -> RunConfig:
    unknown = set(raw) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    model = raw.get("model")
    if model not in MODEL_CONFIGS:
        raise ConfigError(f"'model' must be one of {sorted(MODEL_CONFIGS)}, got {model!r}")
    inputs = dict(raw.get("inputs") or {})
    bad = set(inputs) - INPUT_KEYS
    if bad:
        raise ConfigError(f"unknown input keys: {sorted(bad)}")
    for key in REQUIRED_INPUTS[model]:
        if key not in inputs:
            raise ConfigError(f"missing required input 'inputs.{key}' for {model}")
    if base is not None:
        for key in PATH_KEYS & set(inputs):
            p = Path(inputs[key])
            inputs[key] = str(p if p.is_absolute() else (base / p).resolve())
    hyper = dict(raw.get("hyper") or {})
    allowed = {f.name for f in fields(MODEL_CONFIGS[model])} - {"seed"}
    bad = set(hyper) - allowed
    if bad:
        raise ConfigError(f"unknown hyperparameters for {model}: {sorted(bad)}")
    for key in REQUIRED_HYPER[model]:
        if key not in hyper:
            raise ConfigError(f"missing required hyperparameter 'hyper.{key}' for {model}")
    seed = raw.get("seed", 0)
    if not isinstance(seed, int) or isinstance(seed, bool):
        raise ConfigError(f"'seed' must be an integer, got {seed!r}")
    cfg = RunConfig(model=model, inputs=inputs, hyper=hyper, seed=seed,
                    output_dir=str(raw.get("output_dir", "runs")))
    try:
        cfg.model_config()
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid hyperparameters for {model}: {exc}") from None
    return cfg


def load_run_config(path: str | Path, overrides=()) -> RunConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a JSON object")
    return validate(apply_overrides(raw, overrides), base=path.parent.resolve())
