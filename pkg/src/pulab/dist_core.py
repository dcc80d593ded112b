"""Discrete distribution algebra over finite domains.

Probabilities may be ``float`` or :class:`fractions.Fraction`; every routine
here uses plain Python arithmetic, so rational inputs give exact answers.
Sets handed to the set-function routines may be int bitmasks or iterables of
domain indices.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations
from typing import Callable, Iterable, Sequence, Union

import numpy as np

from .concept_core import ConceptClass, as_mask, indices_of, mask_of
from .rng import generator

__all__ = [
    "DistributionError",
    "ZeroMassError",
    "UndefinedRatioError",
    "MarginalDistribution",
    "LabeledDiscreteDistribution",
    "Sample",
    "Views",
    "ErrorMetrics",
    "SourceMetrics",
    "NetCheck",
    "derive_views",
    "error_metrics",
    "source_metrics",
    "weight_ratio",
    "b_distance",
    "is_eps_net",
    "draw",
    "all_subsets",
    "singletons",
]

Number = Union[float, Fraction]
NORMALIZATION_TOL = 1e-12


class DistributionError(ValueError):
    pass


class ZeroMassError(DistributionError):
    """Conditioning on an event of probability zero."""


class UndefinedRatioError(DistributionError):
    """Weight ratio over a collection with no set of positive target mass."""


def _total(values: Iterable[Number]) -> Number:
    values = list(values)
    if all(isinstance(v, (Fraction, int)) for v in values):
        return sum(values, Fraction(0))
    return math.fsum(float(v) for v in values)


def _check_normalized(total: Number) -> None:
    if abs(total - 1) > NORMALIZATION_TOL:
        raise DistributionError(f"probabilities sum to {float(total)!r}, not 1")


def _num_to_json(p: Number):
    return float(p)


@dataclass(frozen=True)
class MarginalDistribution:
    """Distribution over domain indices; atoms sorted by index."""

    atoms: tuple[tuple[int, Number], ...]

    def __post_init__(self):
        atoms = tuple(sorted((int(x), p) for x, p in self.atoms))
        xs = [x for x, _ in atoms]
        if len(set(xs)) != len(xs):
            raise DistributionError("duplicate atom in marginal distribution")
        if any(x < 0 for x in xs):
            raise DistributionError("negative domain index")
        if any(p < 0 for _, p in atoms):
            raise DistributionError("negative probability")
        _check_normalized(_total(p for _, p in atoms))
        object.__setattr__(self, "atoms", atoms)

    @classmethod
    def from_weights(cls, weights: dict[int, Number]) -> "MarginalDistribution":
        return cls(tuple(weights.items()))

    @classmethod
    def uniform(cls, points: Iterable[int]) -> "MarginalDistribution":
        pts = sorted(set(points))
        if not pts:
            raise DistributionError("uniform distribution over an empty set")
        return cls(tuple((x, Fraction(1, len(pts))) for x in pts))

    @classmethod
    def point_mass(cls, x: int) -> "MarginalDistribution":
        return cls(((x, Fraction(1)),))

    @property
    def pmf(self) -> dict[int, Number]:
        return dict(self.atoms)

    @property
    def support(self) -> tuple[int, ...]:
        return tuple(x for x, p in self.atoms if p > 0)

    def prob(self, x: int) -> Number:
        return self.pmf.get(x, 0)

    def mass(self, A) -> Number:
        m = as_mask(A)
        return _total(p for x, p in self.atoms if (m >> x) & 1)

    def to_json(self) -> dict:
        return {"atoms": [{"x": x, "p": _num_to_json(p)} for x, p in self.atoms]}

    @classmethod
    def from_json(cls, obj) -> "MarginalDistribution":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(tuple((int(a["x"]), float(a["p"])) for a in obj["atoms"]))


@dataclass(frozen=True)
class LabeledDiscreteDistribution:
    """Distribution over ``X × {0,1}``; atoms sorted by ``(x, y)``."""

    atoms: tuple[tuple[int, int, Number], ...]

    def __post_init__(self):
        atoms = tuple(sorted((int(x), int(y), p) for x, y, p in self.atoms))
        keys = [(x, y) for x, y, _ in atoms]
        if len(set(keys)) != len(keys):
            raise DistributionError("duplicate (x, y) atom")
        if any(y not in (0, 1) for _, y, _ in atoms):
            raise DistributionError("labels must be 0 or 1")
        if any(x < 0 for x, _, _ in atoms):
            raise DistributionError("negative domain index")
        if any(p < 0 for _, _, p in atoms):
            raise DistributionError("negative probability")
        _check_normalized(_total(p for _, _, p in atoms))
        object.__setattr__(self, "atoms", atoms)

    @property
    def alpha(self) -> Number:
        return _total(p for _, y, p in self.atoms if y == 1)

    def label_mass(self, y: int) -> Number:
        return _total(p for _, yy, p in self.atoms if yy == y)

    def marginal(self) -> MarginalDistribution:
        acc: dict[int, list[Number]] = {}
        for x, _, p in self.atoms:
            acc.setdefault(x, []).append(p)
        return MarginalDistribution(tuple((x, _total(ps)) for x, ps in acc.items()))

    def conditional(self, y: int) -> MarginalDistribution:
        z = self.label_mass(y)
        if z == 0:
            raise ZeroMassError(f"label {y} has probability zero")
        return MarginalDistribution(
            tuple((x, p / z) for x, yy, p in self.atoms if yy == y)
        )

    def points(self) -> tuple[int, ...]:
        return tuple(sorted({x for x, _, _ in self.atoms}))

    def to_json(self) -> dict:
        return {
            "atoms": [
                {"x": x, "y": y, "p": _num_to_json(p)} for x, y, p in self.atoms
            ]
        }

    @classmethod
    def from_json(cls, obj) -> "LabeledDiscreteDistribution":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(
            tuple((int(a["x"]), int(a["y"]), float(a["p"])) for a in obj["atoms"])
        )


class Views:
    """Derived views of a labeled distribution.

    ``D_plus`` / ``D_minus`` raise :class:`ZeroMassError` on access when the
    corresponding label has no mass.
    """

    def __init__(self, D: LabeledDiscreteDistribution):
        self._D = D
        self.alpha = D.alpha
        self.D_marginal = D.marginal()

    @property
    def D_plus(self) -> MarginalDistribution:
        return self._D.conditional(1)

    @property
    def D_minus(self) -> MarginalDistribution:
        return self._D.conditional(0)


def derive_views(D: LabeledDiscreteDistribution) -> Views:
    return Views(D)


def as_predictor(f) -> Callable[[int], int]:
    """Wrap an int bitmask as a predictor; callables pass through."""
    if isinstance(f, (int, np.integer)):
        m = int(f)
        return lambda x: (m >> x) & 1
    return f


class ErrorMetrics:
    """``err`` plus the conditional miss rates ``err_plus`` / ``err_minus``.

    ``err_plus`` is Pr_{D+}[f(x) != 1], ``err_minus`` is Pr_{D-}[f(x) != 0].
    Either raises :class:`ZeroMassError` when its label has no mass.
    """

    def __init__(self, err: Number, miss_pos: Number, miss_neg: Number,
                 alpha: Number):
        self.err = err
        self._miss_pos = miss_pos
        self._miss_neg = miss_neg
        self.alpha = alpha

    @property
    def err_plus(self) -> Number:
        if self.alpha == 0:
            raise ZeroMassError("err_plus undefined: no positive mass")
        return self._miss_pos / self.alpha

    @property
    def err_minus(self) -> Number:
        if self.alpha == 1:
            raise ZeroMassError("err_minus undefined: no negative mass")
        return self._miss_neg / (1 - self.alpha)


def error_metrics(D: LabeledDiscreteDistribution, f) -> ErrorMetrics:
    pred = as_predictor(f)
    miss_pos, miss_neg = [], []
    for x, y, p in D.atoms:
        if int(pred(x)) != y:
            (miss_pos if y == 1 else miss_neg).append(p)
    mp, mn = _total(miss_pos), _total(miss_neg)
    return ErrorMetrics(_total([mp, mn]), mp, mn, D.alpha)


def _mass_outside(Q: MarginalDistribution, c: int) -> Number:
    return _total(p for x, p in Q.atoms if not (c >> x) & 1)


@dataclass(frozen=True)
class SourceMetrics:
    err_P_one: tuple[Number, ...]
    lambda_P: Number
    argmin: int


def source_metrics(C: ConceptClass, D: LabeledDiscreteDistribution,
                   P: MarginalDistribution) -> SourceMetrics:
    """Per-concept ``Pr_P[c(x) != 1]`` and ``min_c err_plus(c) + Pr_P[c(x) != 1]``."""
    d_plus = D.conditional(1)
    err_p = tuple(_mass_outside(P, c) for c in C.concepts)
    err_plus = [_mass_outside(d_plus, c) for c in C.concepts]
    totals = [ep + e for ep, e in zip(err_plus, err_p)]
    best = min(range(len(totals)), key=lambda i: totals[i])
    return SourceMetrics(err_p, totals[best], best)


def _masks(B) -> list[int]:
    return [as_mask(A) for A in B]


def weight_ratio(B, Q1: MarginalDistribution, Q2: MarginalDistribution) -> Number:
    """``inf Q1(A)/Q2(A)`` over members A of B with ``Q2(A) != 0``."""
    ratios = []
    for m in _masks(B):
        q2 = Q2.mass(m)
        if q2 != 0:
            ratios.append(Q1.mass(m) / q2)
    if not ratios:
        raise UndefinedRatioError("no set in the collection has positive target mass")
    return min(ratios)


def b_distance(B, Q1: MarginalDistribution, Q2: MarginalDistribution) -> Number:
    masks = _masks(B)
    if not masks:
        raise ValueError("B-distance over an empty collection")
    return 2 * max(abs(Q1.mass(m) - Q2.mass(m)) for m in masks)


@dataclass(frozen=True)
class NetCheck:
    is_net: bool
    witness: frozenset[int] | None = None

    def __bool__(self) -> bool:
        return self.is_net


def is_eps_net(N, B, Q: MarginalDistribution, eps: Number) -> NetCheck:
    """Does ``N`` hit every member of ``B`` whose Q-weight is at least eps?"""
    if eps <= 0:
        raise ValueError("eps must be positive")
    items = N.items if isinstance(N, Sample) else N
    hit = mask_of(int(x) for x in items)
    for m in _masks(B):
        if Q.mass(m) >= eps and not (m & hit):
            return NetCheck(False, frozenset(indices_of(m)))
    return NetCheck(True)


def all_subsets(points: Iterable[int], max_size: int | None = None):
    """Every subset of ``points`` (as bitmasks), smallest first."""
    pts = sorted(set(points))
    top = len(pts) if max_size is None else min(max_size, len(pts))
    for k in range(top + 1):
        for combo in combinations(pts, k):
            yield mask_of(combo)


def singletons(points: Iterable[int]) -> list[int]:
    return [1 << x for x in sorted(set(points))]


@dataclass(frozen=True, eq=False)
class Sample:
    """An ordered multiset of domain indices and the seed that produced it."""

    items: np.ndarray
    seed: int | None = None
    labels: np.ndarray | None = field(default=None)

    def __len__(self) -> int:
        return len(self.items)

    def domain(self) -> frozenset[int]:
        return frozenset(int(x) for x in self.items)

    def to_json(self) -> dict:
        out = {"items": [int(x) for x in self.items], "seed": self.seed}
        if self.labels is not None:
            out["labels"] = [int(y) for y in self.labels]
        return out

    @classmethod
    def from_json(cls, obj) -> "Sample":
        labels = obj.get("labels")
        return cls(
            np.asarray(obj["items"], dtype=np.int64),
            obj.get("seed"),
            None if labels is None else np.asarray(labels, dtype=np.int64),
        )


def _sampling_table(dist) -> tuple[np.ndarray, list]:
    if isinstance(dist, LabeledDiscreteDistribution):
        keys = [(x, y) for x, y, p in dist.atoms if p > 0]
        probs = [float(p) for _, _, p in dist.atoms if p > 0]
    else:
        keys = [x for x, p in dist.atoms if p > 0]
        probs = [float(p) for _, p in dist.atoms if p > 0]
    cdf = np.cumsum(probs)
    cdf /= cdf[-1]
    return cdf, keys


def draw(dist, n: int, seed: int) -> Sample:
    """``n`` i.i.d. draws by inverse CDF over the canonical atom order."""
    if n < 0:
        raise ValueError("sample size must be non-negative")
    cdf, keys = _sampling_table(dist)
    u = generator(seed).random(n)
    idx = np.minimum(np.searchsorted(cdf, u, side="right"), len(keys) - 1)
    if isinstance(dist, LabeledDiscreteDistribution):
        xs = np.array([k[0] for k in keys], dtype=np.int64)
        ys = np.array([k[1] for k in keys], dtype=np.int64)
        return Sample(xs[idx], seed, ys[idx])
    xs = np.array(keys, dtype=np.int64)
    return Sample(xs[idx], seed)


def sample_from_items(items: Sequence[int], seed: int | None = None) -> Sample:
    return Sample(np.asarray(list(items), dtype=np.int64), seed)
