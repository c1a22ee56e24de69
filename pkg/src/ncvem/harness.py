"""Convergence studies, tau sweeps, rate fitting and CSV/JSON emission."""
from __future__ import annotations

import csv
import json
from dataclasses import asdict, dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.optimize import brentq

from .eigsolve import solve_gevp
from .forms import VARIANTS, StabilizationOptions, assemble
from .meshgen import DOMAINS, FAMILIES, UnsupportedCombination, generate_family

CSV_COLUMNS = ("level", "h", "dofs", "eig_index", "lambda_h", "lambda_ref", "rel_error")
TAU_COLUMNS = ("tau_multiplier",) + CSV_COLUMNS
ZERO_MODE_TOL = 1e-8
CLUSTER_TOL = 1e-12
MAX_REFERENCE_COUNT = 20
LSHAPE_REFERENCE_FILE = "lshape_neumann_reference.json"
DEFAULT_TAU_SWEEP = (0.1, 0.2, 0.5, 1.0, 2.0, 5.0, 10.0)


class NonPositiveData(ValueError):
    pass


class MissingReference(RuntimeError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    domain: str = "unit_square"
    bc: str = "dirichlet"
    family: str = "random_quads"
    k: int = 1
    variant: str = "nonstabilized"
    levels: tuple[int, ...] = (0, 1, 2, 3)
    num_eigs: int = 6
    seed: int = 0
    tau_sweep: tuple[float, ...] | None = None
    out: str | None = None
    json_out: str | None = None
    sigma_rule: str | None = None
    tau_rule: str | None = None
    mean_over: str = "all"

    def __post_init__(self):
        levels = tuple(int(l) for l in self.levels)
        object.__setattr__(self, "levels", levels)
        if not levels or any(b <= a for a, b in zip(levels, levels[1:])):
            raise ValueError("levels must be nonempty and strictly ascending")
        if self.num_eigs < 1:
            raise ValueError("num_eigs must be at least 1")
        if self.domain not in DOMAINS or self.family not in FAMILIES:
            raise UnsupportedCombination(f"{self.family!r} on {self.domain!r}")
        if self.bc not in ("dirichlet", "neumann"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        if self.tau_sweep is not None:
            object.__setattr__(self, "tau_sweep", tuple(float(t) for t in self.tau_sweep))

    @property
    def options(self) -> StabilizationOptions:
        return StabilizationOptions(self.sigma_rule, self.tau_rule, self.mean_over)


@dataclass(frozen=True)
class ConvergenceRecord:
    level: int
    h: float
    dofs: int
    eig_index: int
    lambda_h: float
    lambda_ref: float
    rel_error: float

    def row(self) -> list:
        return [self.level, repr(self.h), self.dofs, self.eig_index, repr(self.lambda_h),
                repr(self.lambda_ref), repr(self.rel_error)]


@dataclass
class ConvergenceResult:
    config: ExperimentConfig
    records: list[ConvergenceRecord]
    rates: dict[int, float]
    discarded: dict[int, int] = field(default_factory=dict)

    def errors(self, eig_index: int) -> tuple[np.ndarray, np.ndarray]:
        rows = [r for r in self.records if r.eig_index == eig_index]
        return np.array([r.h for r in rows]), np.array([r.rel_error for r in rows])

    def eigenvalues(self, level: int) -> np.ndarray:
        return np.array([r.lambda_h for r in self.records if r.level == level])


@dataclass(frozen=True)
class TauSweepRecord:
    tau_multiplier: float
    record: ConvergenceRecord

    def row(self) -> list:
        return [repr(self.tau_multiplier)] + self.record.row()


# -- references ----------------------------------------------------------------

def _square_spectrum(count: int, start: int) -> list[float]:
    n = int(np.ceil(np.sqrt(2 * count))) + 2
    vals = sorted(a * a + b * b for a in range(start, n + start) for b in range(start, n + start))
    return [np.pi ** 2 * v for v in vals[:count]]


@lru_cache(maxsize=1)
def stored_lshape_reference() -> dict:
    path = resources.files("ncvem") / "data" / LSHAPE_REFERENCE_FILE
    if not path.is_file():
        raise MissingReference(
            f"{LSHAPE_REFERENCE_FILE} not found; run scripts/extrapolate_lshape_reference.py")
    return json.loads(path.read_text())


def reference_eigenvalues(domain: str, bc: str, count: int) -> list[float]:
    """Exact or stored eigenvalues, ascending, repeated by multiplicity.

    The square spectrum is ``pi^2 (n^2 + m^2)``. The L-shape Neumann list is
    ``[0, lam1, lam2, pi^2, pi^2]`` with ``lam1, lam2`` taken from the stored
    extrapolation of the degree-3 runs.
    """
    if not 1 <= count <= MAX_REFERENCE_COUNT:
        raise ValueError(f"count must lie in 1..{MAX_REFERENCE_COUNT}")
    if domain == "unit_square" and bc == "dirichlet":
        return _square_spectrum(count, 1)
    if domain == "unit_square" and bc == "neumann":
        return _square_spectrum(count, 0)
    if domain == "lshape" and bc == "neumann":
        data = stored_lshape_reference()
        vals = [0.0, data["lambda1"], data["lambda2"], np.pi ** 2, np.pi ** 2]
        if count > len(vals):
            raise ValueError(f"only {len(vals)} L-shape reference values are available")
        return vals[:count]
    raise UnsupportedCombination(f"no reference spectrum for {domain}/{bc}")


def first_index(bc: str) -> int:
    """Index of the first reference: Neumann lists start with the zero mode 0."""
    return 0 if bc == "neumann" else 1


def clusters(values, tol: float = CLUSTER_TOL) -> list[list[int]]:
    """Group consecutive (sorted) values that agree to relative ``tol``."""
    groups: list[list[int]] = []
    for i, v in enumerate(values):
        if groups and abs(v - values[groups[-1][0]]) <= tol * max(abs(v), 1.0):
            groups[-1].append(i)
        else:
            groups.append([i])
    return groups


def zero_modes(eigenvalues: np.ndarray) -> np.ndarray:
    if len(eigenvalues) == 0:
        return np.zeros(0, dtype=bool)
    return np.abs(eigenvalues) < ZERO_MODE_TOL * np.abs(eigenvalues).max()


# -- rates and extrapolation -----------------------------------------------------

def fit_rate(pairs) -> float:
    """Least-squares slope of ``log(error)`` against ``log(h)``."""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if len(pairs) < 2:
        raise ValueError("need at least two (h, error) pairs")
    if np.any(pairs <= 0) or not np.all(np.isfinite(pairs)):
        raise NonPositiveData("h and error must be positive and finite")
    x, y = np.log(pairs[:, 0]), np.log(pairs[:, 1])
    return float(np.polyfit(x, y, 1)[0])


def tail_rate(h, err, n_last: int = 3) -> float:
    """``fit_rate`` over the last ``n_last`` levels; NaN if undefined."""
    h, err = np.asarray(h)[-n_last:], np.asarray(err)[-n_last:]
    try:
        return fit_rate(np.column_stack([h, err]))
    except (ValueError, NonPositiveData):
        return float("nan")


def richardson3(h, values) -> tuple[float, float]:
    """Limit and order of ``values[i] = lam + C h[i]^p`` through three points."""
    h = np.asarray(h, dtype=float)
    v = np.asarray(values, dtype=float)
    if h.shape != (3,) or v.shape != (3,) or not np.all(np.diff(h) < 0):
        raise ValueError("need three values on strictly decreasing h")
    d1, d2 = v[0] - v[1], v[1] - v[2]
    if d1 == 0 or d2 == 0 or np.sign(d1) != np.sign(d2):
        raise ValueError("sequence is not monotone; extrapolation undefined")

    def g(p):
        return d1 * (h[1] ** p - h[2] ** p) - d2 * (h[0] ** p - h[1] ** p)

    p = brentq(g, 1e-3, 20.0)
    c = d1 / (h[0] ** p - h[1] ** p)
    return float(v[2] - c * h[2] ** p), float(p)


# -- drivers ---------------------------------------------------------------------

def _solve_level(config: ExperimentConfig, level: int, tau_override: float | None = None):
    mesh = generate_family(config.family, level, config.domain, config.seed)
    system = assemble(mesh, config.k, config.bc, config.variant, tau_override, config.options)
    n = system.A.shape[0]
    result = solve_gevp(system.A, system.B, min(config.num_eigs, n))
    return mesh, system, result


def _records(config: ExperimentConfig, level: int, mesh, n_dofs: int,
             eigenvalues: np.ndarray, refs: list[float]) -> list[ConvergenceRecord]:
    lam = np.sort(eigenvalues)
    if config.bc == "neumann":
        lam = np.where(zero_modes(lam), 0.0, lam)
    out = []
    start = first_index(config.bc)
    for i, (lh, lr) in enumerate(zip(lam, refs)):
        err = abs(lh - lr) / lr if lr != 0 else abs(lh)
        out.append(ConvergenceRecord(level, mesh.h, n_dofs, start + i, float(lh), float(lr),
                                     float(err)))
    return out


def run_convergence(config: ExperimentConfig, tau_override: float | None = None) -> ConvergenceResult:
    """Solve on every level and fit rates per eigenvalue index.

    Discrete eigenvalues are matched to references in ascending order, which
    is the same as matching within clusters of equal references. For a zero
    reference the absolute error is reported.
    """
    refs = reference_eigenvalues(config.domain, config.bc, config.num_eigs)
    records, discarded = [], {}
    for level in config.levels:
        mesh, system, result = _solve_level(config, level, tau_override)
        discarded[level] = result.n_discarded
        records += _records(config, level, mesh, system.A.shape[0], result.eigenvalues, refs)
    records.sort(key=lambda r: (r.level, r.eig_index))
    res = ConvergenceResult(config, records, {}, discarded)
    for idx in sorted({r.eig_index for r in records}):
        h, err = res.errors(idx)
        if refs[idx - first_index(config.bc)] != 0:
            res.rates[idx] = tail_rate(h, err)
    return res


def run_tau_sweep(config: ExperimentConfig, multipliers=None, n_eigs: int = 4) -> list[TauSweepRecord]:
    """lambda_1..lambda_4 for each stabilization multiplier and level."""
    if config.variant != "stabilized":
        raise ValueError("tau sweeps need the stabilized variant")
    multipliers = tuple(multipliers or config.tau_sweep or DEFAULT_TAU_SWEEP)
    refs = reference_eigenvalues(config.domain, config.bc, n_eigs)
    out = []
    for level in config.levels:
        for t in multipliers:
            mesh, system, result = _solve_level(config, level, t)
            lam = result.eigenvalues[:n_eigs]
            for rec in _records(config, level, mesh, system.A.shape[0], lam, refs):
                out.append(TauSweepRecord(t, rec))
    out.sort(key=lambda r: (r.record.level, r.tau_multiplier, r.record.eig_index))
    return out


def tau_variation(rows: list[TauSweepRecord], eig_index: int = 1, lo: float = 0.1,
                  hi: float = 10.0) -> dict[int, float]:
    """Per level, ``(max - min) / min`` of one eigenvalue over multipliers in [lo, hi]."""
    by_level: dict[int, list[float]] = {}
    for r in rows:
        if r.record.eig_index == eig_index and lo <= r.tau_multiplier <= hi:
            by_level.setdefault(r.record.level, []).append(r.record.lambda_h)
    return {lev: float((max(v) - min(v)) / min(v)) for lev, v in sorted(by_level.items())}


def expected_windows(config: ExperimentConfig) -> dict[int, tuple[float, float]]:
    """Acceptable fitted-rate windows per eigenvalue index."""
    k = config.k
    if config.domain == "unit_square":
        return {1: (2 * k - 0.4, 2 * k + 0.6)}
    windows = {1: (1.05, 1.65)}
    if config.num_eigs >= 4:
        windows[3] = (2 * k - 0.4, np.inf)
    return windows


def check_result(result: ConvergenceResult) -> dict[str, dict]:
    """Named assertion outcomes for a convergence run."""
    checks = {}
    for idx, (lo, hi) in expected_windows(result.config).items():
        rate = result.rates.get(idx, float("nan"))
        checks[f"rate_lambda{idx}"] = {"value": rate, "window": [lo, hi],
                                       "passed": bool(lo <= rate <= hi)}
    return checks


def monotone_from(result: ConvergenceResult, level: int = 2) -> bool:
    for idx in result.rates:
        h, err = result.errors(idx)
        levels = np.array([r.level for r in result.records if r.eig_index == idx])
        e = err[levels >= level]
        if np.any(np.diff(e) >= 0):
            return False
    return True


# -- output ----------------------------------------------------------------------

def write_csv(records, path, columns=CSV_COLUMNS) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in records:
            w.writerow(r.row())


def read_csv(path) -> list[dict]:
    with Path(path).open(newline="") as fh:
        return list(csv.DictReader(fh))


def summary(result: ConvergenceResult, checks: dict[str, dict]) -> dict:
    cfg = asdict(result.config)
    cfg["levels"] = list(cfg["levels"])
    return {
        "config": cfg,
        "rates": {str(k): v for k, v in result.rates.items()},
        "discarded": {str(k): v for k, v in result.discarded.items()},
        "assertions": checks,
        "passed": all(c["passed"] for c in checks.values()),
    }


def _clean(obj):
    # strict JSON has no NaN or infinity
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, np.integer):
        return int(obj)
    return obj


def write_json(data: dict, path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_clean(data), indent=2, allow_nan=False) + "\n")
