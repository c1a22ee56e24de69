"""Command line entry point: ``ncvem run`` and ``ncvem mesh``."""
from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import harness
from .mesh import save_mesh
from .meshgen import DOMAINS, FAMILIES, generate_family

log = logging.getLogger("ncvem")


def parse_levels(text: str) -> tuple[int, ...]:
    """``"a:b"`` (inclusive) or a comma list."""
    try:
        if ":" in text:
            a, b = text.split(":")
            return tuple(range(int(a), int(b) + 1))
        return tuple(int(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad level range {text!r}") from exc


def parse_floats(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(t) for t in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad number list {text!r}") from exc


class _Parser(argparse.ArgumentParser):
    # exit status 2 is reserved for failed assertions
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="ncvem", description="Nonconforming VEM eigenvalue studies")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="convergence study")
    run.add_argument("--domain", choices=DOMAINS, default="unit_square")
    run.add_argument("--bc", choices=("dirichlet", "neumann"), default="dirichlet")
    run.add_argument("--family", choices=FAMILIES, default="random_quads")
    run.add_argument("--degree", type=int, choices=(1, 2, 3), default=1)
    run.add_argument("--variant", choices=("nonstabilized", "stabilized"), default="nonstabilized")
    run.add_argument("--levels", type=parse_levels, default=(0, 1, 2, 3))
    run.add_argument("--num-eigs", type=int, default=6)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--out", required=True, help="CSV path")
    run.add_argument("--json", dest="json_out", help="summary JSON path")
    run.add_argument("--tau-sweep", type=parse_floats,
                     help="comma list of stabilization multipliers (stabilized variant)")
    run.add_argument("--sigma-rule", choices=("mean", "max"))
    run.add_argument("--assert", dest="check", action="store_true",
                     help="exit with status 2 unless rates (and tau stability) pass")

    mesh = sub.add_parser("mesh", help="write a generated mesh as JSON")
    mesh.add_argument("--family", choices=FAMILIES, required=True)
    mesh.add_argument("--level", type=int, required=True)
    mesh.add_argument("--domain", choices=DOMAINS, default="unit_square")
    mesh.add_argument("--seed", type=int, default=0)
    mesh.add_argument("--out", required=True)
    return parser


def tau_path(out: str) -> Path:
    p = Path(out)
    return p.with_name(p.stem + "_tau" + p.suffix)


def cmd_run(args) -> int:
    config = harness.ExperimentConfig(
        domain=args.domain, bc=args.bc, family=args.family, k=args.degree, variant=args.variant,
        levels=args.levels, num_eigs=args.num_eigs, seed=args.seed, tau_sweep=args.tau_sweep,
        out=args.out, json_out=args.json_out, sigma_rule=args.sigma_rule,
    )
    result = harness.run_convergence(config)
    harness.write_csv(result.records, config.out)
    checks = harness.check_result(result)
    for idx, rate in result.rates.items():
        log.info("eig %d: fitted rate %.3f", idx, rate)
    if config.tau_sweep is not None:
        rows = harness.run_tau_sweep(config)
        harness.write_csv(rows, tau_path(config.out), harness.TAU_COLUMNS)
        variation = harness.tau_variation(rows)
        worst = max(variation.values()) if variation else 0.0
        checks["tau_stability"] = {"value": worst, "threshold": 0.05, "per_level": variation,
                                   "passed": bool(worst < 0.05)}
    info = harness.summary(result, checks)
    if config.json_out:
        harness.write_json(info, config.json_out)
    for name, c in checks.items():
        print(f"{name}: {'PASS' if c['passed'] else 'FAIL'} ({c['value']:.4g})")
    if args.check and not info["passed"]:
        return 2
    return 0


def cmd_mesh(args) -> int:
    mesh = generate_family(args.family, args.level, args.domain, args.seed)
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    save_mesh(mesh, args.out)
    print(f"{mesh.n_cells} cells, {mesh.n_vertices} vertices, h = {mesh.h:.6g}")
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        return cmd_run(args) if args.command == "run" else cmd_mesh(args)
    except Exception as exc:  # noqa: BLE001 - report and exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
