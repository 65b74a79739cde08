"""Command-line entry point: ``netembed {train,infer,eval,gen,selftest}``.

Exit codes: 0 success, 1 selftest failure, 2 usage or input error,
3 numerical failure.  ``NETEMBED_OUTPUT_DIR`` overrides the configured output
directory and ``NETEMBED_THREADS`` caps BLAS threads.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import depthlgp, dhne, drne, dvne, sdne
from .config import ConfigError, RunConfig, load_run_config
from .errors import DisconnectedNodeError
from .graph import (Graph, GraphFormatError, HyperGraph, adjacency, hyper_adjacency, load_edge_list,
                    load_hyperedge_list, write_edge_list, write_hypergraph)
from .harness import generators, metrics
from .storage import format_row, load_model, read_embeddings, save_model, write_embeddings
from .tensor import NumericalError

log = logging.getLogger("netembed")

EXIT_OK, EXIT_FAIL, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3
MODEL_STATES = {
    "sdne": sdne.SdneModel,
    "drne": drne.DrneState,
    "dhne": dhne.DhneModel,
    "dvne": dvne.DvneModel,
    "depthlgp": depthlgp.DepthLgpModel,
}


class UsageError(Exception):
    pass


# -- helpers ---------------------------------------------------------------------

def _graph_arrays(g: Graph) -> dict[str, np.ndarray]:
    return {"aux.edges": np.array(g.edges, dtype=np.float64).reshape(-1, 3)}


def _graph_from_blob(arrays: dict, meta: dict) -> Graph:
    e = arrays["aux.edges"]
    return Graph.from_edges(len(meta["labels"]), [(int(u), int(v), w) for u, v, w in e], labels=meta["labels"])


def _model_arrays(arrays: dict) -> dict:
    return {k: v for k, v in arrays.items() if not k.startswith("aux.")}


def _write_metrics(out: Path, record: dict) -> None:
    (out / "metrics.json").write_text(json.dumps(record, indent=2, sort_keys=True) + "\n")
    with open(out / "metrics.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        keys = sorted(record)
        w.writerow(keys)
        w.writerow([record[k] for k in keys])


def _align(labels_emb: list[str], graph_labels, what: str) -> np.ndarray:
    """Row index of each graph label in the embedding file."""
    pos = {lab: i for i, lab in enumerate(labels_emb)}
    missing = [lab for lab in graph_labels if lab not in pos]
    extra = sorted(set(labels_emb) - set(graph_labels))
    offenders = missing + extra
    if offenders:
        raise UsageError(f"{what}: {len(offenders)} ids do not match the graph; first offenders: {offenders[:5]}")
    return np.array([pos[lab] for lab in graph_labels], dtype=int)


def _output_dir(cfg: RunConfig) -> Path:
    out = Path(os.environ.get("NETEMBED_OUTPUT_DIR") or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


# -- train -----------------------------------------------------------------------

def cmd_train(args) -> int:
    cfg = load_run_config(args.config, args.set)
    out = _output_dir(cfg)
    cfg.write_snapshot(out)
    mc = cfg.model_config()
    record = {"model": cfg.model, "seed": cfg.seed, "config_hash": cfg.config_hash()}
    weighted = bool(cfg.inputs.get("weighted", False))
    if cfg.model == "dhne":
        hg = load_hyperedge_list(cfg.inputs["hyperedges"], cfg.inputs["types"])
        model, E = dhne.train(hg, mc)
        arrays, meta = model.state()
        arrays["aux.types"] = np.array(hg.node_types, dtype=int)
        arrays["aux.hyperedges"] = np.array(hg.hyperedges, dtype=int).reshape(-1, 3)
        meta.update(labels=list(hg.labels), type_labels=list(hg.type_labels))
        write_embeddings(out / "embeddings.txt", hg.labels, E,
                         prefix=[hg.type_labels[t] for t in hg.node_types])
        record.update(nodes=hg.n, initial_loss=model.history[0], final_loss=model.history[-1])
    else:
        g = load_edge_list(cfg.inputs["graph"], weighted=weighted)
        if cfg.model == "sdne":
            model, E = sdne.train(g, mc)
            record.update(initial_loss=model.initial_loss, final_loss=model.final_loss)
        elif cfg.model == "drne":
            model = drne.train(g, mc)
            E = model.X.data
            record.update(initial_loss=model.history[0], final_loss=model.history[-1])
        elif cfg.model == "dvne":
            model, mu, std = dvne.train(g, mc)
            E = np.hstack([mu, std])
            record.update(initial_loss=model.history[0], final_loss=model.history[-1])
        else:
            labels, F = read_embeddings(cfg.inputs["embeddings"], int(cfg.inputs.get("skip_fields", 0)))
            f = F[_align(labels, g.labels, "embeddings")]
            model = depthlgp.train(g, f, mc)
            E = None
            record.update(initial_loss=model.history[0],
                          final_loss=float(np.mean(model.history[-min(50, len(model.history)):])))
        arrays, meta = model.state()
        arrays.update(_graph_arrays(g))
        meta["labels"] = list(g.labels)
        if cfg.model == "dvne":
            arrays.update({"aux.mu": mu, "aux.std": std})
        if E is not None:
            write_embeddings(out / "embeddings.txt", g.labels, E)
        record["nodes"] = g.n
    meta["config_hash"] = cfg.config_hash()
    save_model(out, cfg.model, arrays, meta)
    _write_metrics(out, record)
    print(f"wrote {out}")
    return EXIT_OK


# -- infer -----------------------------------------------------------------------

def _read_query_lines(path) -> list[tuple[int, list[str]]]:
    rows = []
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            tok = raw.split("#", 1)[0].split()
            if tok:
                rows.append((lineno, tok))
    return rows


def _is_delta(rows) -> bool:
    return bool(rows) and all(tok[0].startswith("+") for _, tok in rows)


def cmd_infer(args) -> int:
    kind, arrays, meta = load_model(args.model)
    model = MODEL_STATES[kind].from_state(_model_arrays(arrays), meta)
    rows = _read_query_lines(args.query)
    sink = open(args.output, "w", encoding="utf-8") if args.output else sys.stdout
    try:
        if kind in ("sdne", "drne", "depthlgp"):
            if not _is_delta(rows):
                raise UsageError(f"{kind} answers '+node'/'+edge' delta files only")
            g = _graph_from_blob(arrays, meta)
            g2 = depthlgp.parse_delta(args.query, g)
            new = range(g.n, g2.n)
            if kind == "depthlgp":
                for v, vec in zip(new, depthlgp.predict_embeddings(model, g2)):
                    sink.write(f"{g2.labels[v]} {format_row(vec)}\n")
            else:
                S2 = adjacency(g2)
                for v in new:
                    old_row = S2[v, :g.n]
                    try:
                        if kind == "sdne":
                            vec = sdne.embed_new_vertex(model, old_row)
                        else:
                            vec = drne.embed_new_node(model, np.flatnonzero(old_row), np.random.default_rng(0))
                    except DisconnectedNodeError as exc:
                        raise UsageError(f"node {g2.labels[v]}: {exc}") from None
                    sink.write(f"{g2.labels[v]} {format_row(vec)}\n")
        elif kind == "dhne":
            if _is_delta(rows):
                raise UsageError("dhne answers similarity queries (three node ids per line), not deltas")
            hg = HyperGraph(node_types=tuple(int(t) for t in arrays["aux.types"]),
                            hyperedges=tuple(tuple(int(x) for x in e) for e in arrays["aux.hyperedges"]),
                            n_types=model.n_types, labels=tuple(meta["labels"]),
                            type_labels=tuple(meta["type_labels"]))
            index = {lab: i for i, lab in enumerate(hg.labels)}
            A = hyper_adjacency(hg)
            for lineno, tok in rows:
                if len(tok) != 3:
                    raise UsageError(f"{args.query}:{lineno}: expected three node ids")
                try:
                    triple = [index[t] for t in tok]
                except KeyError as exc:
                    raise UsageError(f"{args.query}:{lineno}: unknown node {exc.args[0]!r}") from None
                sink.write(f"{' '.join(tok)} {dhne.similarity(model, hg, triple, A)!r}\n")
        elif kind == "dvne":
            if _is_delta(rows):
                raise UsageError("dvne answers W2 pair queries (two node ids per line), not deltas")
            index = {lab: i for i, lab in enumerate(meta["labels"])}
            mu, std = arrays["aux.mu"], arrays["aux.std"]
            for lineno, tok in rows:
                if len(tok) != 2:
                    raise UsageError(f"{args.query}:{lineno}: expected two node ids")
                try:
                    i, j = index[tok[0]], index[tok[1]]
                except KeyError as exc:
                    raise UsageError(f"{args.query}:{lineno}: unknown node {exc.args[0]!r}") from None
                d = dvne.w2_distance(dvne.GaussianEmbedding(mu[i], std[i] ** 2),
                                     dvne.GaussianEmbedding(mu[j], std[j] ** 2))
                sink.write(f"{tok[0]} {tok[1]} {d!r}\n")
        else:
            raise UsageError(f"unsupported model kind {kind!r}")
    finally:
        if sink is not sys.stdout:
            sink.close()
    return EXIT_OK


# -- eval ------------------------------------------------------------------------

def _parse_metrics(spec: str) -> list[tuple[str, int | None]]:
    out = []
    for item in filter(None, (s.strip() for s in spec.split(","))):
        if item == "auc":
            out.append(("auc", None))
        elif item.startswith("precision@"):
            try:
                out.append(("precision", int(item.split("@", 1)[1])))
            except ValueError:
                raise UsageError(f"bad metric {item!r}; use precision@K") from None
        else:
            raise UsageError(f"unknown metric {item!r}; expected auc or precision@K")
    if not out:
        raise UsageError("empty metric set")
    return out


def cmd_eval(args) -> int:
    requested = _parse_metrics(args.metrics or "")
    g = load_edge_list(args.graph, weighted=args.weighted)
    labels, E = read_embeddings(args.embeddings, args.skip_fields)
    E = E[_align(labels, g.labels, args.embeddings)]
    S = adjacency(g)
    meta = {"model": None, "seed": args.seed, "config_hash": None}
    snap = Path(args.embeddings).parent / "resolved_config.json"
    if snap.exists():
        resolved = json.loads(snap.read_text())
        meta.update(model=resolved.get("model"), config_hash=resolved.get("config_hash"))
    scores = metrics.score_matrix(E, args.scorer)
    record = dict(meta, scorer=args.scorer)
    for name, k in requested:
        if name == "precision":
            record[f"precision@{k}"] = metrics.reconstruction_precision_at_k(S, E, k, args.scorer)
        else:
            if args.holdout:
                held = load_edge_list(args.holdout)
                pos = [(g.index_of(held.labels[u]), g.index_of(held.labels[v])) for u, v, _ in held.edges]
                blocked = S.copy()
                for u, v in pos:
                    blocked[u, v] = blocked[v, u] = 1.0
            else:
                pos = [(u, v) for u, v, _ in g.edges]
                blocked = S
            rng = np.random.default_rng(args.seed)
            neg = metrics.sample_non_edges(blocked, len(pos), rng)
            record["auc"] = metrics.link_prediction_auc(pos, neg, scores)
    text = json.dumps(record, indent=2, sort_keys=True)
    print(text)
    if args.output:
        out = Path(args.output)
        out.mkdir(parents=True, exist_ok=True)
        _write_metrics(out, record)
    return EXIT_OK


# -- gen / selftest --------------------------------------------------------------

def cmd_gen(args) -> int:
    params = {}
    for item in args.param or ():
        if "=" not in item:
            raise UsageError(f"--param {item!r} is not of the form key=value")
        k, v = item.split("=", 1)
        try:
            params[k] = json.loads(v)
        except json.JSONDecodeError:
            params[k] = v
    spec = generators.SyntheticSpec(kind=args.kind, params=params, seed=args.seed)
    obj = generators.generate(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    if isinstance(obj, HyperGraph):
        write_hypergraph(obj, out, out.with_suffix(".types"))
        print(f"wrote {out} and {out.with_suffix('.types')}")
    else:
        write_edge_list(obj, out)
        print(f"wrote {out}")
    return EXIT_OK


def cmd_selftest(args) -> int:
    from .harness.selftest import run_all
    results = run_all()
    for name, ok, detail in results:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
    return EXIT_OK if all(ok for _, ok, _ in results) else EXIT_FAIL


# -- entry -----------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="netembed", description="Deep graph embedding toolkit.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    t = sub.add_parser("train", help="train a model from a JSON run config")
    t.add_argument("config")
    t.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config value (repeatable)")
    t.set_defaults(func=cmd_train)

    i = sub.add_parser("infer", help="out-of-sample embeddings or pair/triple scores")
    i.add_argument("model", help="directory written by train")
    i.add_argument("query", help="delta file (+node/+edge) or query file")
    i.add_argument("--output", help="write results here instead of stdout")
    i.set_defaults(func=cmd_infer)

    e = sub.add_parser("eval", help="score an embedding file against a graph")
    e.add_argument("embeddings")
    e.add_argument("graph")
    e.add_argument("--metrics", default="", help="comma list: auc, precision@K")
    e.add_argument("--scorer", default="dot", choices=sorted(metrics.SCORERS))
    e.add_argument("--skip-fields", type=int, default=0, help="leading columns before the id")
    e.add_argument("--holdout", help="edge list of held-out positives for auc")
    e.add_argument("--weighted", action="store_true")
    e.add_argument("--seed", type=int, default=0)
    e.add_argument("--output", help="directory for metrics.json and metrics.csv")
    e.set_defaults(func=cmd_eval)

    g = sub.add_parser("gen", help="write a synthetic graph or hypergraph")
    g.add_argument("kind", choices=generators.KINDS)
    g.add_argument("out")
    g.add_argument("--param", action="append", metavar="KEY=VALUE")
    g.add_argument("--seed", type=int, default=0)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("selftest", help="run the quick oracle suites")
    s.set_defaults(func=cmd_selftest)
    return p


def _thread_limit():
    n = os.environ.get("NETEMBED_THREADS")
    if not n:
        return contextlib.nullcontext()
    from threadpoolctl import threadpool_limits
    return threadpool_limits(limits=int(n))


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with _thread_limit():
            return args.func(args)
    except (ConfigError, UsageError, GraphFormatError, FileNotFoundError, KeyError, ValueError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
