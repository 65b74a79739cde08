"""Exploratory: does DVNE assign larger variance to low-degree nodes?

Prints the Spearman correlation between node degree and mean embedding
variance; a negative value means better-connected nodes are more certain.
"""
import argparse

import numpy as np

from netembed import dvne
from netembed.harness import generators, metrics


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=5)
    ap.add_argument("--epochs", type=int, default=50)
    args = ap.parse_args()
    rhos = []
    for seed in range(args.seeds):
        g = generators.sbm([30, 30], 0.3, 0.03, seed=seed)
        _, mu, std = dvne.train(g, dvne.DvneConfig(seed=seed, epochs=args.epochs))
        rho = metrics.spearman(g.degrees, (std ** 2).mean(axis=1))
        rhos.append(rho)
        print(f"seed {seed}  spearman(degree, mean variance) {rho:+.3f}")
    print(f"mean {np.mean(rhos):+.3f}")


if __name__ == "__main__":
    main()
