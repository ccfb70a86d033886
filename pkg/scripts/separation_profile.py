"""Compare how well-spread the reference sets of each selector are on S1.

For every seed, selects K references per method and reports the median of the
M smallest pairwise distances among them (larger means better spread).
"""

import argparse

import numpy as np

from mlm.evaluation import gen_s1_synthetic
from mlm.refselect import METHODS, SelectionConfig, pairwise_separation_profile, select


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--k", type=int, default=100)
    ap.add_argument("--m", type=int, default=500)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--n", type=int, default=1000)
    args = ap.parse_args()

    medians = {m: [] for m in METHODS}
    for seed in range(args.seeds):
        X = gen_s1_synthetic(args.n, seed).inputs
        for m in METHODS:
            idx = select(X, SelectionConfig(m, args.k, seed))
            medians[m].append(np.median(pairwise_separation_profile(X, idx, args.m)))

    wins = sum(a > b for a, b in zip(medians["rs_maximin"], medians["random"]))
    for m in METHODS:
        v = np.asarray(medians[m])
        print(f"{m:>14}: mean median {v.mean():.4f} (min {v.min():.4f}, max {v.max():.4f})")
    print(f"maximin beats random in {wins}/{args.seeds} seeds")


if __name__ == "__main__":
    main()
