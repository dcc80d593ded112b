"""PU learners over finite classes and axis-aligned boxes."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from fractions import Fraction
from typing import Sequence

import numpy as np

from .concept_core import ConceptClass, DomainError
from .dist_core import (
    LabeledDiscreteDistribution,
    MarginalDistribution,
    Sample,
    all_subsets,
    weight_ratio,
)

__all__ = [
    "InfeasibleError",
    "ConceptHypothesis",
    "Box",
    "Constant",
    "EMPTY_BOX",
    "hypothesis_to_json",
    "hypothesis_from_json",
    "GeometricInstance",
    "perm_finite",
    "lagrangian_finite",
    "lagrangian_losses",
    "perm_box",
    "grid_cells",
    "cell_of",
    "Algorithm1Result",
    "algorithm1",
    "die_learner_L0",
]


class InfeasibleError(ValueError):
    """No concept in the class contains every positive example."""


@dataclass(frozen=True)
class ConceptHypothesis:
    cls: ConceptClass = field(repr=False)
    index: int

    @property
    def mask(self) -> int:
        return self.cls.concepts[self.index]

    @property
    def members(self) -> frozenset[int]:
        return frozenset(i for i in range(self.cls.n) if (self.mask >> i) & 1)

    def __call__(self, x) -> int:
        return (self.mask >> int(x)) & 1


@dataclass(frozen=True)
class Box:
    """Closed axis-aligned box ``[lo, hi]``."""

    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in self.lo)
        hi = tuple(float(v) for v in self.hi)
        if len(lo) != len(hi):
            raise DomainError("box corners differ in dimension")
        if any(a > b for a, b in zip(lo, hi)):
            raise DomainError("box needs lo <= hi in every coordinate")
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)

    @property
    def k(self) -> int:
        return len(self.lo)

    def contains(self, points: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return np.all((pts >= self.lo) & (pts <= self.hi), axis=1)

    def __call__(self, point) -> int:
        return int(self.contains(point)[0])


@dataclass(frozen=True)
class Constant:
    value: int

    def __post_init__(self):
        if self.value not in (0, 1):
            raise ValueError("constant hypothesis must be 0 or 1")

    def contains(self, points: np.ndarray) -> np.ndarray:
        return np.full(len(np.atleast_2d(points)), bool(self.value))

    def __call__(self, x) -> int:
        return self.value


# The all-negative box; predicts 0 everywhere.
EMPTY_BOX = Constant(0)


def hypothesis_to_json(h) -> dict:
    if isinstance(h, ConceptHypothesis):
        return {"kind": "concept", "index": h.index}
    if isinstance(h, Box):
        return {"kind": "box", "lo": list(h.lo), "hi": list(h.hi)}
    if isinstance(h, Constant):
        return {"kind": "const", "value": h.value}
    raise TypeError(f"cannot serialise hypothesis {h!r}")


def hypothesis_from_json(obj: dict, cls: ConceptClass | None = None):
    kind = obj.get("kind")
    if kind == "concept":
        if cls is None:
            raise ValueError("concept hypothesis needs its class")
        return ConceptHypothesis(cls, int(obj["index"]))
    if kind == "box":
        return Box(tuple(obj["lo"]), tuple(obj["hi"]))
    if kind == "const":
        return Constant(int(obj["value"]))
    raise ValueError(f"unknown hypothesis kind {kind!r}")


def _items(S) -> np.ndarray:
    if isinstance(S, Sample):
        return S.items
    return np.asarray(list(S) if not isinstance(S, np.ndarray) else S, dtype=np.int64)


def _counts(S, n: int) -> np.ndarray:
    items = _items(S)
    if items.size and (items.min() < 0 or items.max() >= n):
        raise DomainError(f"sample leaves the domain of size {n}")
    return np.bincount(items, minlength=n).astype(np.int64)


def perm_finite(cls: ConceptClass, S_P, S_U) -> ConceptHypothesis:
    """Consistent concept with the fewest unlabeled hits (first in canonical order)."""
    cp = _counts(S_P, cls.n)
    cu = _counts(S_U, cls.n)
    M = cls.membership
    consistent = M[:, cp > 0].all(axis=1)
    idx = np.flatnonzero(consistent)
    if idx.size == 0:
        raise InfeasibleError("no concept contains every positive example")
    hits = M[idx].astype(np.int64) @ cu
    return ConceptHypothesis(cls, int(idx[np.argmin(hits)]))


def lagrangian_losses(cls: ConceptClass, S_P, S_U, gamma) -> list[Fraction]:
    """Exact values of ``|c|S_U|/a + gamma*(b - |c|S_P|)/b`` for every concept."""
    cp = _counts(S_P, cls.n)
    cu = _counts(S_U, cls.n)
    a, b = int(cu.sum()), int(cp.sum())
    if a < 1 or b < 1:
        raise ValueError("the Lagrangian loss needs non-empty samples")
    g = Fraction(gamma)
    if g < 0:
        raise ValueError("gamma must be non-negative")
    M = cls.membership.astype(np.int64)
    hu = (M @ cu).tolist()
    hp = (M @ cp).tolist()
    return [Fraction(u, a) + g * Fraction(b - p, b) for u, p in zip(hu, hp)]


def lagrangian_finite(cls: ConceptClass, S_P, S_U, gamma) -> ConceptHypothesis:
    """Minimiser of the Lagrangian PU loss over the whole class.

    Losses are compared in exact rational arithmetic so ties resolve to the
    canonical order regardless of rounding.
    """
    cp = _counts(S_P, cls.n)
    cu = _counts(S_U, cls.n)
    a, b = int(cu.sum()), int(cp.sum())
    if a < 1 or b < 1:
        raise ValueError("the Lagrangian loss needs non-empty samples")
    g = Fraction(gamma)
    if g < 0:
        raise ValueError("gamma must be non-negative")
    M = cls.membership.astype(np.int64)
    hu = (M @ cu).tolist()
    hp = (M @ cp).tolist()
    # loss * a * b * den(gamma), kept in integers
    scores = [
        b * g.denominator * u + g.numerator * a * (b - p) for u, p in zip(hu, hp)
    ]
    return ConceptHypothesis(cls, min(range(len(scores)), key=scores.__getitem__))


def _as_points(S, k: int | None = None) -> np.ndarray:
    pts = np.asarray(S, dtype=float)
    if pts.size == 0:
        return pts.reshape(0, k if k is not None else 0)
    pts = np.atleast_2d(pts)
    if k is not None and pts.shape[1] != k:
        raise DomainError(f"expected points in dimension {k}, got {pts.shape[1]}")
    return pts


def perm_box(S_prime, S_U=None):
    """Coordinatewise bounding box of ``S_prime``; ``EMPTY_BOX`` when it is empty.

    The bounding box sits inside every box consistent with ``S_prime``, so it
    has the fewest unlabeled hits among them.
    """
    pts = _as_points(S_prime)
    if S_U is not None:
        u = _as_points(S_U)
        if pts.size and u.size and u.shape[1] != pts.shape[1]:
            raise DomainError("positive and unlabeled points differ in dimension")
    if pts.shape[0] == 0:
        return EMPTY_BOX
    return Box(tuple(pts.min(axis=0)), tuple(pts.max(axis=0)))


def grid_cells(gamma: float, k: int) -> int:
    """Cells per axis so that each cell has side at most gamma/sqrt(k)."""
    if not 0 < gamma <= 1:
        raise ValueError("gamma must lie in (0, 1]")
    return math.ceil(math.sqrt(k) / gamma)


def cell_of(points: np.ndarray, cells: int) -> np.ndarray:
    """Flat cell index per point; cells are half-open except the last."""
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    ix = np.minimum(np.floor(pts * cells).astype(np.int64), cells - 1)
    if pts.shape[0] == 0:
        return np.zeros(0, dtype=np.int64)
    return np.ravel_multi_index(ix.T, (cells,) * pts.shape[1])


@dataclass(frozen=True, eq=False)
class Algorithm1Result:
    hypothesis: object
    boxes_hit: int
    filtered_count: int
    kept: np.ndarray


def algorithm1(S_P, S_U, gamma: float, k: int) -> Algorithm1Result:
    """Drop positives whose grid cell holds no unlabeled point, then PERM over boxes."""
    P = _as_points(S_P, k)
    U = _as_points(S_U, k)
    for pts in (P, U):
        if pts.size and (pts.min() < 0 or pts.max() > 1):
            raise DomainError("points must lie in the unit cube")
    cells = grid_cells(gamma, k)
    hit = set(cell_of(U, cells).tolist()) if U.shape[0] else set()
    keep = np.array([c in hit for c in cell_of(P, cells).tolist()], dtype=bool)
    kept = P[keep] if P.shape[0] else P
    return Algorithm1Result(
        hypothesis=perm_box(kept, U),
        boxes_hit=len(hit),
        filtered_count=int(P.shape[0] - keep.sum()) if P.shape[0] else 0,
        kept=kept,
    )


def die_learner_L0(rolls: Sequence[int], k: int) -> tuple[int, ...]:
    """Flag face j (1-based) iff its count strictly exceeds m/k."""
    if k < 2:
        raise ValueError("the die needs at least two faces")
    r = np.asarray(list(rolls) if not isinstance(rolls, np.ndarray) else rolls,
                   dtype=np.int64)
    if r.size == 0:
        raise ValueError("L0 needs at least one roll")
    if r.min() < 1 or r.max() > k:
        raise DomainError(f"die faces must lie in 1..{k}")
    counts = np.bincount(r - 1, minlength=k)
    m = r.size
    return tuple(int(c * k > m) for c in counts)


@dataclass(frozen=True, eq=False)
class GeometricInstance:
    """Labeled points in ``[0,1]^k`` with a positive-sampling marginal.

    ``D`` and ``P`` are indexed by rows of ``coords``; ``P`` may charge points
    that ``D`` does not.  Labels must be deterministic, and every pair of
    oppositely labeled support points must be more than ``2*gamma`` apart.
    """

    coords: np.ndarray
    D: LabeledDiscreteDistribution
    P: MarginalDistribution
    gamma: float
    pi: float = 0.0
    family: str = "geometric"
    params: dict = field(default_factory=dict)
    closed_forms: dict = field(default_factory=dict)

    def __post_init__(self):
        coords = np.atleast_2d(np.asarray(self.coords, dtype=float))
        object.__setattr__(self, "coords", coords)
        if coords.min() < 0 or coords.max() > 1:
            raise DomainError("coordinates must lie in the unit cube")
        n = coords.shape[0]
        if any(x >= n for x in self.D.points()) or any(x >= n for x, _ in self.P.atoms):
            raise DomainError("distribution references a point without coordinates")
        if not 0 < self.gamma <= 1:
            raise ValueError("gamma must lie in (0, 1]")
        labels: dict[int, int] = {}
        for x, y, p in self.D.atoms:
            if p > 0:
                if labels.setdefault(x, y) != y:
                    raise ValueError(f"point {x} carries both labels")
        pos = coords[[x for x, y in labels.items() if y == 1]]
        neg = coords[[x for x, y in labels.items() if y == 0]]
        if len(pos) and len(neg):
            gap = np.sqrt(((pos[:, None, :] - neg[None, :, :]) ** 2).sum(-1)).min()
            if gap <= 2 * self.gamma:
                raise ValueError(
                    f"margin violated: opposite labels {gap:.4g} apart, need > {2 * self.gamma}"
                )
        if self.D.alpha < self.pi:
            raise ValueError("positive mass below the declared lower bound pi")

    @property
    def k(self) -> int:
        return self.coords.shape[1]

    @cached_property
    def D_X(self) -> MarginalDistribution:
        return self.D.marginal()

    @property
    def n_points(self) -> int:
        return self.coords.shape[0]

    def labels(self) -> dict[int, int]:
        return {x: y for x, y, p in self.D.atoms if p > 0}

    def points_of(self, S) -> np.ndarray:
        return self.coords[_items(S)]

    def predictor(self, h):
        preds = h.contains(self.coords).astype(int)
        return lambda x: int(preds[int(x)])

    def cell_weight_ratio(self) -> float:
        """Weight ratio of P to D+ over every subset of every grid cell."""
        cells = grid_cells(self.gamma, self.k)
        owner = cell_of(self.coords, cells)
        d_plus = self.D.conditional(1)
        collection = []
        for c in sorted(set(owner.tolist())):
            pts = np.flatnonzero(owner == c).tolist()
            collection.extend(m for m in all_subsets(pts) if m)
        return weight_ratio(collection, self.P, d_plus)
