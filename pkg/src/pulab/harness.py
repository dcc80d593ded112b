"""Seeded Monte Carlo trials, success-probability estimates and sweeps.

Each trial draws ``S^P ~ P^b`` and ``S^U ~ D_X^a`` from two streams derived
from the trial seed, runs a learner and scores the output exactly against
the atoms of ``D``.  Trials in a cell ``(b, a)`` are keyed by index, so the
output never depends on how many worker processes ran them.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence

import numpy as np
from scipy.optimize import isotonic_regression
from scipy.stats import binomtest

from .dist_core import Sample, draw
from .hard_instances import FAMILIES, load_instance
from .learners import (
    Constant,
    GeometricInstance,
    InfeasibleError,
    algorithm1,
    lagrangian_finite,
    perm_box,
    perm_finite,
)
from .rng import DEFAULT_SEED, derive_seed

__all__ = [
    "TIE_TOL",
    "Learner",
    "TrialRecord",
    "ExperimentConfig",
    "CellResult",
    "ThresholdFit",
    "run_trial",
    "run_cell",
    "summarize",
    "success_probability",
    "sweep_sample_complexity",
    "write_csv",
    "fitted_threshold",
    "wilson_interval",
    "exceeds_rate",
    "geometric_error",
]

# Slack on the failure event ``excess >= eps`` for instances read back from
# float JSON; exact instances are unaffected.
TIE_TOL = 1e-12

CSV_COLUMNS = ["family", "learner", "b", "a", "trials", "eps", "failure_rate",
               "wilson_lo", "wilson_hi", "seed"]


@dataclass(frozen=True)
class Learner:
    """``perm``, ``lagrangian`` (needs ``gamma``) or ``algorithm1``.

    ``algorithm1`` falls back to the instance's margin when ``gamma`` is None.
    """

    name: str
    gamma: object = None

    def __post_init__(self):
        if self.name not in ("perm", "lagrangian", "algorithm1"):
            raise ValueError(f"unknown learner {self.name!r}")
        if self.name == "lagrangian" and self.gamma is None:
            raise ValueError("the Lagrangian learner needs gamma")

    @classmethod
    def parse(cls, text: "str | Learner") -> "Learner":
        """Read ``"perm"``, ``"lagrangian:1"`` or ``"algorithm1:0.25"``."""
        if isinstance(text, Learner):
            return text
        name, _, arg = str(text).partition(":")
        gamma = None
        if arg:
            gamma = Fraction(arg) if "/" in arg else float(arg)
        return cls(name.strip(), gamma)

    def __str__(self) -> str:
        return self.name if self.gamma is None else f"{self.name}:{self.gamma}"

    def fit(self, inst, S_P: Sample, S_U: Sample):
        if isinstance(inst, GeometricInstance):
            P, U = inst.points_of(S_P), inst.points_of(S_U)
            if self.name == "perm":
                return perm_box(P, U), {}
            if self.name == "algorithm1":
                g = inst.gamma if self.gamma is None else float(self.gamma)
                res = algorithm1(P, U, g, inst.k)
                return res.hypothesis, {"boxes_hit": res.boxes_hit,
                                        "filtered_count": res.filtered_count}
            raise ValueError("the Lagrangian learner needs a finite class")
        if self.name == "perm":
            return perm_finite(inst.cls, S_P, S_U), {}
        if self.name == "lagrangian":
            return lagrangian_finite(inst.cls, S_P, S_U, self.gamma), {}
        raise ValueError("algorithm1 needs a geometric instance")


@dataclass(frozen=True)
class TrialRecord:
    b: int
    a: int
    seed: int
    err: object
    excess: object
    elapsed: float = field(compare=False)
    infeasible: bool = False
    diagnostics: dict = field(default_factory=dict, compare=False)
    hypothesis: object = field(default=None, compare=False, repr=False)

    def failed(self, eps) -> bool:
        return bool(self.excess >= eps - TIE_TOL)

    def to_json(self) -> dict:
        return {"b": self.b, "a": self.a, "seed": self.seed, "err": float(self.err),
                "excess": float(self.excess), "elapsed": self.elapsed,
                "infeasible": self.infeasible, "diagnostics": self.diagnostics}


def geometric_error(inst: GeometricInstance, h):
    preds = h.contains(inst.coords)
    return sum((p for x, y, p in inst.D.atoms if int(preds[x]) != y), 0 * inst.D.alpha)


def _approx_error(inst):
    if isinstance(inst, GeometricInstance):
        cf = inst.closed_forms.get("approx_error")
        if cf is not None:
            return cf
        pos = [x for x, y, p in inst.D.atoms if y == 1 and p > 0]
        box = perm_box(inst.coords[pos]) if pos else Constant(0)
        return geometric_error(inst, box)
    return inst.approx_error


def run_trial(inst, learner, b: int, a: int, seed: int) -> TrialRecord:
    """One draw-learn-score round; infeasible PERM counts as ``err = 1``."""
    learner = Learner.parse(learner)
    start = time.perf_counter()
    S_P = draw(inst.P, b, derive_seed(seed, "positive"))
    S_U = draw(inst.D_X, a, derive_seed(seed, "unlabeled"))
    approx = _approx_error(inst)
    try:
        h, diag = learner.fit(inst, S_P, S_U)
    except InfeasibleError:
        err = Fraction(1)
        return TrialRecord(b, a, seed, err, err - approx, time.perf_counter() - start,
                           infeasible=True)
    if isinstance(inst, GeometricInstance):
        err = geometric_error(inst, h)
    else:
        err = inst.errors[h.index]
    return TrialRecord(b, a, seed, err, err - approx, time.perf_counter() - start,
                       diagnostics=diag, hypothesis=h)


@dataclass(frozen=True)
class ExperimentConfig:
    """Instance, learner, grids and targets for a sweep.

    The instance is either ``family`` + ``params`` (see
    :data:`~pulab.hard_instances.FAMILIES`) or a JSON file at
    ``instance_path``.  With ``paired`` the unlabeled size equals ``b`` and
    ``a_grid`` is ignored.
    """

    family: str = ""
    params: dict = field(default_factory=dict)
    learner: str = "perm"
    b_grid: tuple[int, ...] = (100,)
    a_grid: tuple[int, ...] = (100,)
    paired: bool = False
    eps: float = 0.1
    delta: float = 0.1
    trials: int = 100
    seed: int = DEFAULT_SEED
    pi: float | None = None
    instance_path: str | None = None

    def __post_init__(self):
        if self.trials < 1:
            raise ValueError("trials must be at least 1")
        if not self.b_grid or (not self.paired and not self.a_grid):
            raise ValueError("sample-size grids must be nonempty")
        for name in ("eps", "delta"):
            v = getattr(self, name)
            if not 0 < v < 1:
                raise ValueError(f"{name} must lie in (0, 1)")
        Learner.parse(self.learner)

    def cells(self) -> list[tuple[int, int]]:
        if self.paired:
            return [(b, b) for b in sorted(set(self.b_grid))]
        return sorted({(b, a) for b in self.b_grid for a in self.a_grid})

    def build_instance(self):
        if self.instance_path:
            with open(self.instance_path) as fh:
                return load_instance(json.load(fh))
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}")
        return FAMILIES[self.family](self.params)


def _cell_tag(b: int, a: int) -> str:
    return f"b{b}a{a}"


def _run_seeds(args) -> list[TrialRecord]:
    inst, learner, b, a, seeds = args
    return [run_trial(inst, learner, b, a, s) for s in seeds]


def run_cell(inst, learner, b: int, a: int, trials: int, master: int,
             jobs: int = 1) -> list[TrialRecord]:
    """All trials of one cell in index order; ``jobs`` only changes speed."""
    seeds = [derive_seed(master, _cell_tag(b, a), i) for i in range(trials)]
    if jobs <= 1 or trials < 2 * jobs:
        return _run_seeds((inst, learner, b, a, seeds))
    chunks = [seeds[i::jobs] for i in range(jobs)]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        parts = list(pool.map(_run_seeds, [(inst, learner, b, a, c) for c in chunks]))
    out: list[TrialRecord | None] = [None] * trials
    for j, part in enumerate(parts):
        out[j::jobs] = part
    return out


def wilson_interval(failures: int, trials: int, level: float = 0.95) -> tuple[float, float]:
    ci = binomtest(failures, trials).proportion_ci(level, method="wilson")
    return float(ci.low), float(ci.high)


def exceeds_rate(successes: int, trials: int, p0: float, level: float = 0.05) -> tuple[bool, float]:
    """One-sided binomial test of ``H0: p <= p0``; returns (rejected, p-value)."""
    pv = float(binomtest(successes, trials, p0, alternative="greater").pvalue)
    return pv < level, pv


@dataclass(frozen=True)
class CellResult:
    b: int
    a: int
    trials: int
    eps: float
    failures: int
    wilson_lo: float
    wilson_hi: float

    @property
    def failure_rate(self) -> float:
        return self.failures / self.trials


def summarize(records: Sequence[TrialRecord], eps: float) -> CellResult:
    fails = sum(r.failed(eps) for r in records)
    lo, hi = wilson_interval(fails, len(records))
    r0 = records[0]
    return CellResult(r0.b, r0.a, len(records), eps, fails, lo, hi)


def success_probability(config: ExperimentConfig, b: int, a: int, inst=None,
                        jobs: int = 1) -> CellResult:
    """Failure rate of ``excess >= eps`` in one cell with its Wilson interval."""
    inst = config.build_instance() if inst is None else inst
    recs = run_cell(inst, config.learner, b, a, config.trials, config.seed, jobs)
    return summarize(recs, config.eps)


def sweep_sample_complexity(config: ExperimentConfig, eps_values: Iterable[float] | None = None,
                            inst=None, jobs: int = 1) -> list[CellResult]:
    """Every cell of the grid, ordered by ``(b, a, eps)``.

    Several ``eps_values`` are scored on the same trials.
    """
    inst = config.build_instance() if inst is None else inst
    eps_values = sorted(set(eps_values)) if eps_values else [config.eps]
    rows = []
    for b, a in config.cells():
        recs = run_cell(inst, config.learner, b, a, config.trials, config.seed, jobs)
        rows.extend(summarize(recs, e) for e in eps_values)
    return rows


def write_csv(rows: Sequence[CellResult], config: ExperimentConfig, fh=None) -> str:
    """Write the sweep table; returns the text when ``fh`` is None."""
    buf = io.StringIO() if fh is None else fh
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_COLUMNS)
    family = config.family or (config.instance_path or "")
    for r in rows:
        w.writerow([family, str(Learner.parse(config.learner)), r.b, r.a, r.trials,
                    repr(float(r.eps)), repr(r.failure_rate), repr(r.wilson_lo),
                    repr(r.wilson_hi), config.seed])
    return buf.getvalue() if fh is None else ""


@dataclass(frozen=True)
class ThresholdFit:
    """Smallest size whose smoothed failure rate reaches ``delta``.

    ``censored`` is ``"below"`` when the first grid point already succeeds and
    ``"above"`` when no grid point does (``value`` is then infinite).
    """

    value: float
    censored: str | None
    sizes: tuple[int, ...]
    smoothed: tuple[float, ...]


def fitted_threshold(rows: Sequence[CellResult], delta: float, size: str = "b") -> ThresholdFit:
    """Isotonic (non-increasing) fit of the failure rate, then log-linear
    interpolation at the first crossing of ``delta``.

    Zero rates are floored at ``1/(2 * trials)`` before taking logs.
    """
    rows = sorted(rows, key=lambda r: getattr(r, size))
    sizes = np.array([getattr(r, size) for r in rows], dtype=float)
    rates = np.array([r.failure_rate for r in rows])
    weights = np.array([r.trials for r in rows], dtype=float)
    fit = isotonic_regression(rates, weights=weights, increasing=False).x
    fit = np.maximum(fit, 1.0 / (2 * weights))
    hits = np.flatnonzero(fit <= delta)
    out = dict(sizes=tuple(int(s) for s in sizes), smoothed=tuple(float(f) for f in fit))
    if hits.size == 0:
        return ThresholdFit(math.inf, "above", **out)
    i = int(hits[0])
    if i == 0:
        return ThresholdFit(float(sizes[0]), "below", **out)
    m0, m1 = sizes[i - 1], sizes[i]
    l0, l1 = math.log(fit[i - 1]), math.log(fit[i])
    value = m0 + (math.log(delta) - l0) / (l1 - l0) * (m1 - m0)
    return ThresholdFit(float(value), None, **out)
