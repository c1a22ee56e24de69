#!/usr/bin/env python3
"""First four eigenvalues against the mass stabilization multiplier.

Hexagonal family, stabilized variant, unit square with Dirichlet conditions.
Writes the full table as CSV and prints lambda_1 per level and multiplier.

    python scripts/tau_sweep.py [--degree 1] [--levels 0:3] [--out results/tau_sweep.csv]
"""
import argparse
from pathlib import Path

from ncvem import harness as H
from ncvem.cli import parse_floats, parse_levels


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--family", default="hexagonal_distorted")
    parser.add_argument("--degree", type=int, default=1)
    parser.add_argument("--levels", type=parse_levels, default=(0, 1, 2, 3))
    parser.add_argument("--multipliers", type=parse_floats, default=H.DEFAULT_TAU_SWEEP)
    parser.add_argument("--out", type=Path, default=Path("results/tau_sweep.csv"))
    args = parser.parse_args()

    cfg = H.ExperimentConfig(family=args.family, k=args.degree, variant="stabilized",
                             levels=args.levels, num_eigs=4)
    rows = H.run_tau_sweep(cfg, args.multipliers, n_eigs=4)
    H.write_csv(rows, args.out, H.TAU_COLUMNS)

    table = {(r.record.level, r.tau_multiplier): r.record.lambda_h
             for r in rows if r.record.eig_index == 1}
    print("level" + "".join(f"{t:>11g}" for t in args.multipliers) + "   variation")
    variation = H.tau_variation(rows, 1, min(args.multipliers), max(args.multipliers))
    for level in args.levels:
        vals = "".join(f"{table[(level, t)]:11.5f}" for t in args.multipliers)
        print(f"{level:>5}{vals}   {variation[level]:.2%}")
    print(f"exact lambda_1 = {H.reference_eigenvalues('unit_square', 'dirichlet', 1)[0]:.5f}")


if __name__ == "__main__":
    main()
