"""DepthLGP leave-10-out on a 60-node SBM with SDNE embeddings versus the neighbour-mean baseline."""
import argparse

import numpy as np

from netembed import depthlgp, sdne
from netembed.harness import generators


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--steps", type=int, default=400)
    args = ap.parse_args()
    wins = 0
    for seed in range(args.seeds):
        g = generators.sbm([20, 20, 20], 0.3, 0.02, seed)
        _, f = sdne.train(g, sdne.SdneConfig(seed=seed, epochs=200))
        rng = np.random.default_rng(seed)
        held = np.sort(rng.choice(60, 10, replace=False))
        order = np.r_[np.setdiff1d(np.arange(60), held), held]
        g_all, f = g.induced(order), f[order]
        model = depthlgp.train(g_all.induced(np.arange(50)), f[:50],
                               depthlgp.DepthLgpConfig(seed=seed, steps=args.steps))
        pred = depthlgp.predict_embeddings(model, g_all)
        base = np.array([f[[u for u in g_all.neighbors[v] if u < 50]].mean(axis=0)
                         if any(u < 50 for u in g_all.neighbors[v]) else np.zeros(f.shape[1])
                         for v in range(50, 60)])
        mse = ((pred - f[50:]) ** 2).sum(axis=1).mean()
        base_mse = ((base - f[50:]) ** 2).sum(axis=1).mean()
        wins += mse < base_mse
        print(f"seed {seed}  mse {mse:.4f}  neighbour-mean {base_mse:.4f}  "
              f"eta {model.params['eta'].data.mean():.3f}  zeta {model.params['zeta'].data.mean():.3f}")
    print(f"wins {wins}/{args.seeds}")


if __name__ == "__main__":
    main()
