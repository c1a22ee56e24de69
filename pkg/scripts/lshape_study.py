#!/usr/bin/env python3
"""Neumann eigenvalues of the L-shaped domain on corner-refined Voronoi meshes.

Needs the stored reference (scripts/extrapolate_lshape_reference.py).
Prints the fitted rates of lambda_1 (singular eigenfunction) and of the
analytical lambda_3 = pi^2 for each degree.

    python scripts/lshape_study.py [--levels 1:4] [--outdir results/test2]
"""
import argparse
from pathlib import Path

from ncvem import harness as H
from ncvem.cli import parse_levels


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--levels", type=parse_levels, default=(1, 2, 3, 4))
    parser.add_argument("--degrees", default="1,2,3")
    parser.add_argument("--variant", default="nonstabilized")
    parser.add_argument("--outdir", type=Path, default=Path("results/test2"))
    args = parser.parse_args()

    for k in (int(t) for t in args.degrees.split(",")):
        cfg = H.ExperimentConfig(domain="lshape", bc="neumann", family="voronoi_cvt", k=k,
                                 variant=args.variant, levels=args.levels, num_eigs=5)
        res = H.run_convergence(cfg)
        H.write_csv(res.records, args.outdir / f"lshape_k{k}_{args.variant}.csv")
        print(f"k={k}")
        for level in args.levels:
            rows = [r for r in res.records if r.level == level]
            errs = " ".join(f"{r.rel_error:10.3e}" for r in rows[1:])
            print(f"  level {level}  h={rows[0].h:.4f}  dofs={rows[0].dofs:<7d} rel errors {errs}")
        print(f"  rates: lambda_1 {res.rates[1]:.2f}, lambda_2 {res.rates[2]:.2f}, "
              f"lambda_3 {res.rates[3]:.2f}, lambda_4 {res.rates[4]:.2f}")


if __name__ == "__main__":
    main()
