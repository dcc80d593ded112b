"""Exact combinatorics of finite concept classes.

Concepts are subsets of a finite domain ``{0, ..., n-1}`` stored as integer
bitmasks (bit ``i`` set iff point ``i`` is a member).  A :class:`ConceptClass`
keeps its concepts deduplicated and sorted by bit pattern; that order decides
every argmin tie in the package.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations
from math import comb
from typing import Iterable

import numpy as np

__all__ = [
    "DomainError",
    "FiniteDomain",
    "ConceptClass",
    "mask_of",
    "indices_of",
    "project",
    "vc_dimension",
    "claw_number_certified",
    "ClawCertificate",
    "claw_certificate",
    "symmetric_difference_class",
    "intersection_closure",
]


class DomainError(ValueError):
    """An index or size falls outside the finite domain."""


def mask_of(indices: Iterable[int]) -> int:
    m = 0
    for i in indices:
        if i < 0:
            raise DomainError(f"negative domain index {i}")
        m |= 1 << i
    return m


def indices_of(mask: int) -> tuple[int, ...]:
    out = []
    i = 0
    while mask:
        if mask & 1:
            out.append(i)
        mask >>= 1
        i += 1
    return tuple(out)


def as_mask(A) -> int:
    """Accept either an int bitmask or an iterable of indices."""
    if isinstance(A, (int, np.integer)):
        return int(A)
    return mask_of(A)


@dataclass(frozen=True)
class FiniteDomain:
    size: int

    def __post_init__(self):
        if self.size < 1:
            raise DomainError("domain size must be at least 1")

    @property
    def full_mask(self) -> int:
        return (1 << self.size) - 1

    def check(self, mask: int) -> None:
        if mask >> self.size:
            raise DomainError(
                f"set {indices_of(mask)} leaves the domain of size {self.size}"
            )


@dataclass(frozen=True)
class ConceptClass:
    """A finite family of subsets of ``{0..n-1}`` in canonical order."""

    n: int
    concepts: tuple[int, ...] = field(default=())

    def __post_init__(self):
        dom = FiniteDomain(self.n)
        canon = tuple(sorted(set(int(c) for c in self.concepts)))
        for c in canon:
            dom.check(c)
        object.__setattr__(self, "concepts", canon)

    @classmethod
    def from_sets(cls, n: int, sets: Iterable[Iterable[int]]) -> "ConceptClass":
        return cls(n, tuple(mask_of(s) for s in sets))

    @classmethod
    def powerset(cls, n: int) -> "ConceptClass":
        return cls(n, tuple(range(1 << n)))

    @classmethod
    def co_singletons(cls, n: int) -> "ConceptClass":
        full = (1 << n) - 1
        return cls(n, tuple(full ^ (1 << i) for i in range(n)))

    @classmethod
    def co_size(cls, n: int, h: int) -> "ConceptClass":
        """All subsets of size ``n - h``."""
        return cls.from_sets(n, combinations(range(n), n - h))

    @property
    def domain(self) -> FiniteDomain:
        return FiniteDomain(self.n)

    def __len__(self) -> int:
        return len(self.concepts)

    def __iter__(self):
        return iter(self.concepts)

    def __getitem__(self, i: int) -> int:
        return self.concepts[i]

    def index(self, mask: int) -> int:
        return self.concepts.index(mask)

    def sets(self) -> list[frozenset[int]]:
        return [frozenset(indices_of(c)) for c in self.concepts]

    @cached_property
    def membership(self) -> np.ndarray:
        """Boolean matrix of shape ``(len(self), n)``."""
        return np.array(
            [[(c >> i) & 1 for i in range(self.n)] for c in self.concepts],
            dtype=bool,
        ).reshape(len(self.concepts), self.n)

    def to_json(self) -> dict:
        return {"n": self.n, "concepts": [list(indices_of(c)) for c in self.concepts]}

    @classmethod
    def from_json(cls, obj) -> "ConceptClass":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls.from_sets(int(obj["n"]), obj["concepts"])


def _traces(concepts: Iterable[int], bmask: int) -> set[int]:
    return {c & bmask for c in concepts}


def project(cls: ConceptClass, B: Iterable[int]) -> set[frozenset[int]]:
    """Deduplicated restrictions ``c ∩ B`` over the class."""
    bmask = as_mask(B)
    cls.domain.check(bmask)
    return {frozenset(indices_of(t)) for t in _traces(cls.concepts, bmask)}


def _shatters(concepts: tuple[int, ...], bmask: int, size: int) -> bool:
    return len(_traces(concepts, bmask)) == 1 << size


def vc_dimension(cls: ConceptClass) -> int:
    """Largest size of a shattered subset, by exhaustive search.

    Shattering is hereditary, so the search stops at the first size with no
    shattered set.  Sizes above ``log2 |C|`` are never tried.
    """
    if len(cls) == 0:
        raise ValueError("vc_dimension of an empty class is undefined")
    cap = min(cls.n, len(cls).bit_length() - 1)
    d = 0
    for size in range(1, cap + 1):
        if any(
            _shatters(cls.concepts, mask_of(B), size)
            for B in combinations(range(cls.n), size)
        ):
            d = size
        else:
            break
    return d


def _claw_levels(concepts: tuple[int, ...], n: int, max_size: int) -> list[set[int]]:
    """For each m ≤ max_size, the set of j such that some |B| = m has every
    j-subset of B among its traces."""
    levels: list[set[int]] = [set() for _ in range(max_size + 1)]
    for m in range(max_size + 1):
        for B in combinations(range(n), m):
            bmask = mask_of(B)
            hist = [0] * (m + 1)
            for t in _traces(concepts, bmask):
                hist[t.bit_count()] += 1
            for j in range(m + 1):
                if hist[j] == comb(m, j):
                    levels[m].add(j)
            if len(levels[m]) == m + 1:
                break
    return levels


@dataclass(frozen=True)
class ClawCertificate:
    value: int
    max_level: int


def claw_certificate(cls: ConceptClass, M: int) -> ClawCertificate:
    """Claw number certified on sizes ``h..M``; see :func:`claw_number_certified`."""
    if M < 1 or M > cls.n:
        raise DomainError(f"certificate level M={M} outside 1..{cls.n}")
    levels = _claw_levels(cls.concepts, cls.n, M)
    # Unbounded, the property passes from h to h - 1 (drop a point of the
    # witness one size up), so only a prefix 1..h of passing values counts.
    h = 0
    while h < M and all(m - (h + 1) in levels[m] for m in range(h + 1, M + 1)):
        h += 1
    return ClawCertificate(h, M)


def claw_number_certified(cls: ConceptClass, M: int) -> int:
    """Largest h such that every h' in 1..h passes the check: for every m in
    [h', M] some B with |B| = m has all of its (m - h')-subsets realised as
    restrictions of the class.  0 if h' = 1 already fails.

    The unbounded "for every m" is only checked up to M.
    """
    return claw_certificate(cls, M).value


def symmetric_difference_class(cls: ConceptClass) -> ConceptClass:
    cs = cls.concepts
    return ConceptClass(cls.n, tuple({a ^ b for a in cs for b in cs}))


def intersection_closure(cls: ConceptClass) -> ConceptClass:
    if len(cls) == 0:
        raise ValueError("intersection closure of an empty class")
    closed = set(cls.concepts)
    frontier = set(closed)
    while frontier:
        new = {a & b for a in frontier for b in closed} - closed
        closed |= new
        frontier = new
    return ConceptClass(cls.n, tuple(closed))
