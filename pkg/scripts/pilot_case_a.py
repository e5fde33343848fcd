"""Pilot runs that calibrate the case (a) acceptance threshold.

Runs the ``case_a`` preset over many seeds and reports quantiles of the L2
distance between the pointwise-mean estimate and beta, at the preset ``n``
and at the comparison ``n``.

    python3 scripts/pilot_case_a.py --seeds 200
"""

import argparse
from dataclasses import replace

import numpy as np

from funcreg.harness.config import load_config
from funcreg.harness.scenarios import run_scenario


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--seeds", type=int, default=200)
    ap.add_argument("--config", default="case_a")
    args = ap.parse_args()
    cfg = load_config(args.config)
    n_small = int(cfg.thresholds.get("compare_n", 100))
    big, small = [], []
    for s in range(args.seeds):
        big.append(run_scenario(replace(cfg, seed=s)).metrics["l2_mean_vs_beta"])
        small.append(run_scenario(replace(cfg, seed=s, n=n_small)).metrics["l2_mean_vs_beta"])
    big, small = np.array(big), np.array(small)
    for q in (0.5, 0.9, 0.95, 0.99):
        print(f"q{q:.2f}: n={cfg.n}: {np.quantile(big, q):.4f}   n={n_small}: {np.quantile(small, q):.4f}")
    print(f"fraction with L2(n={cfg.n}) < L2(n={n_small}): {np.mean(big < small):.3f}")
    print(f"seed {cfg.seed}: {big[cfg.seed]:.4f} vs {small[cfg.seed]:.4f}")


if __name__ == "__main__":
    main()
