"""Held-out link prediction AUC of SDNE on a two-block SBM, across seeds."""
import argparse

import numpy as np

from netembed import sdne
from netembed.graph import Graph, adjacency
from netembed.harness import generators, metrics


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--holdout", type=float, default=0.15)
    ap.add_argument("--epochs", type=int, default=200)
    args = ap.parse_args()
    for seed in range(args.seeds):
        g = generators.sbm([20, 20], 0.9, 0.05, seed=seed)
        rng = np.random.default_rng(seed)
        train, test = metrics.holdout_edges(g.edges, args.holdout, rng)
        _, Y = sdne.train(Graph.from_edges(g.n, train, labels=g.labels), sdne.SdneConfig(epochs=args.epochs, seed=7))
        pos = [(u, v) for u, v, _ in test]
        neg = metrics.sample_non_edges(adjacency(g), len(pos), rng)
        row = [f"{metrics.link_prediction_auc(pos, neg, metrics.score_matrix(Y, s)):.3f}" for s in ("neg_sqdist", "dot")]
        print(f"seed {seed}  auc(neg_sqdist) {row[0]}  auc(dot) {row[1]}")


if __name__ == "__main__":
    main()
