"""Distribution families used in PU sample-complexity lower bounds.

Every generator works in exact rational arithmetic: float parameters are read
through their decimal representation (``0.3`` becomes ``3/10``), atoms are
:class:`~fractions.Fraction` objects, and ``closed_forms`` records the
analytically known quantities so they can be checked against the atoms.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from typing import Iterable

import numpy as np

from .concept_core import ConceptClass, indices_of, mask_of
from .dist_core import (
    LabeledDiscreteDistribution,
    MarginalDistribution,
    Sample,
    draw,
    sample_from_items,
)
from .learners import GeometricInstance
from .rng import generator

__all__ = [
    "ParameterError",
    "PUInstance",
    "DieInstance",
    "LeftRightReduction",
    "as_rational",
    "scar_pos_instance",
    "two_point_instance",
    "claw_instance",
    "sar_instance",
    "cov_uni_instance",
    "agno_instance",
    "impossibility_pair",
    "reweight",
    "die_weights",
    "die_instance",
    "die_error",
    "roll_die",
    "random_proper_subset",
    "left_right_to_pu",
    "geo_margin_instance",
    "geo_filter_instance",
    "load_instance",
    "FAMILIES",
]

CLOSED_FORM_TOL = 1e-12


class ParameterError(ValueError):
    """Generator parameters violate the family's preconditions."""


def as_rational(v) -> Fraction:
    """Exact value of ``v``; floats go through their shortest decimal repr."""
    if isinstance(v, Fraction):
        return v
    if isinstance(v, (int, np.integer)):
        return Fraction(int(v))
    if isinstance(v, float):
        return Fraction(repr(v))
    return Fraction(str(v))


def _open_unit(name: str, v) -> Fraction:
    q = as_rational(v)
    if not 0 < q < 1:
        raise ParameterError(f"{name} must lie in (0, 1), got {v}")
    return q


def _subset(name: str, items: Iterable[int], universe: range) -> frozenset[int]:
    s = frozenset(int(i) for i in items)
    bad = sorted(s - set(universe))
    if bad:
        raise ParameterError(f"{name} has elements {bad} outside {universe.start}..{universe.stop - 1}")
    return s


def _jsonable(v):
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, (frozenset, set)):
        return sorted(_jsonable(x) for x in v)
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, dict):
        return {k: _jsonable(x) for k, x in v.items()}
    if isinstance(v, np.integer):
        return int(v)
    return v


@dataclass(frozen=True, eq=False)
class PUInstance:
    """A pair ``(P, D)`` with the class it is built against."""

    family: str
    params: dict
    D: LabeledDiscreteDistribution
    P: MarginalDistribution
    cls: ConceptClass
    closed_forms: dict = field(default_factory=dict)

    def __post_init__(self):
        top = max([x for x, *_ in self.D.atoms] + [x for x, _ in self.P.atoms])
        if top >= self.cls.n:
            raise ParameterError("distribution charges a point outside the class domain")

    @cached_property
    def D_X(self) -> MarginalDistribution:
        return self.D.marginal()

    @cached_property
    def alpha(self):
        return self.D.alpha

    @cached_property
    def errors(self) -> tuple:
        """``err_D`` of every concept, in canonical order.

        Uses ``err(c) = alpha + sum_{x in c} (p(x,0) - p(x,1))``.
        """
        w = [0] * self.cls.n
        for x, y, p in self.D.atoms:
            w[x] += p if y == 0 else -p
        a = self.alpha
        return tuple(
            a + sum((w[i] for i in indices_of(c)), 0 * a) for c in self.cls.concepts
        )

    @cached_property
    def approx_error(self):
        return min(self.errors)

    def error_of(self, index: int):
        return self.errors[index]

    def closed_form_residuals(self) -> dict[str, float]:
        """Absolute gap between each scalar closed form and its recomputation."""
        recomputed = {"alpha": self.alpha, "approx_error": self.approx_error,
                      "total_D": sum(p for *_, p in self.D.atoms),
                      "total_P": sum(p for _, p in self.P.atoms)}
        out = {}
        for key, value in recomputed.items():
            if key in self.closed_forms:
                out[key] = abs(float(self.closed_forms[key] - value))
        return out

    def to_json(self) -> dict:
        return {
            "family": self.family,
            "params": _jsonable(self.params),
            "D": self.D.to_json(),
            "P": self.P.to_json(),
            "class": self.cls.to_json(),
            "closed_forms": _jsonable(self.closed_forms),
        }

    @classmethod
    def from_json(cls, obj) -> "PUInstance":
        if isinstance(obj, str):
            obj = json.loads(obj)
        return cls(
            family=obj["family"],
            params=dict(obj.get("params", {})),
            D=LabeledDiscreteDistribution.from_json(obj["D"]),
            P=MarginalDistribution.from_json(obj["P"]),
            cls=ConceptClass.from_json(obj["class"]),
            closed_forms=dict(obj.get("closed_forms", {})),
        )


def _scar_atoms(d: int, rho: Fraction, O: frozenset[int]):
    unit = rho / (d - 1)
    return [(d - 1, 1, 1 - rho)] + [(i, int(i in O), unit) for i in range(d - 1)]


def scar_pos_instance(d: int, rho, O: Iterable[int] = ()) -> PUInstance:
    """Anchor ``x_{d-1}`` with mass ``1 - rho``; the other points split ``rho``
    evenly and are positive exactly on ``O``.  ``P = D+``."""
    if d < 2:
        raise ParameterError("d must be at least 2")
    rho = _open_unit("rho", rho)
    O = _subset("O", O, range(d - 1))
    D = LabeledDiscreteDistribution(tuple(_scar_atoms(d, rho, O)))
    unit = rho / (d - 1)
    return PUInstance(
        "scar_pos",
        {"d": d, "rho": rho, "O": O},
        D,
        D.conditional(1),
        ConceptClass.powerset(d),
        {"alpha": 1 - rho + unit * len(O), "approx_error": Fraction(0),
         "excess_unit": unit, "anchor_mass": 1 - rho},
    )


def two_point_instance(eps, z: int) -> PUInstance:
    """Mass ``eps`` on ``(x_0, z)`` and ``1 - eps`` on ``(x_1, 1)``."""
    eps = _open_unit("eps", eps)
    if z not in (0, 1):
        raise ParameterError("z must be 0 or 1")
    D = LabeledDiscreteDistribution(((0, z, eps), (1, 1, 1 - eps)))
    alpha = 1 - eps + eps * z
    return PUInstance(
        "two_point",
        {"eps": eps, "z": z},
        D,
        D.conditional(1),
        ConceptClass.powerset(2),
        {"alpha": alpha, "approx_error": Fraction(0),
         "p_x0_under_P": eps / alpha if z else Fraction(0)},
    )


def claw_instance(m: int, h: int, O: Iterable[int], rho) -> PUInstance:
    """``rho/h`` on each negative point of ``O``; the rest share ``1 - rho``."""
    if not 1 <= h < m:
        raise ParameterError("need 1 <= h < m")
    rho = _open_unit("rho", rho)
    O = _subset("O", O, range(m))
    if len(O) != h:
        raise ParameterError(f"|O| = {len(O)} but h = {h}")
    atoms = [(x, 0, rho / h) if x in O else (x, 1, (1 - rho) / (m - h)) for x in range(m)]
    D = LabeledDiscreteDistribution(tuple(atoms))
    return PUInstance(
        "claw",
        {"m": m, "h": h, "O": O, "rho": rho},
        D,
        D.conditional(1),
        ConceptClass.co_size(m, h),
        {"alpha": 1 - rho, "approx_error": Fraction(0), "all_ones_error": rho},
    )


def sar_instance(d: int, rho, r, O: Iterable[int] = ()) -> PUInstance:
    """The scar_pos distribution with ``P = r * D+`` off the anchor.

    The remaining mass ``1 - r * D+({x_0..x_{d-2}})`` sits on the anchor.
    """
    base = scar_pos_instance(d, rho, O)
    r = as_rational(r)
    if not 0 < r <= 1:
        raise ParameterError("r must lie in (0, 1]")
    d_plus = base.P.pmf
    scaled = {x: r * d_plus.get(x, Fraction(0)) for x in range(d - 1)}
    rest = 1 - sum(scaled.values(), Fraction(0))
    if rest < 0:
        raise ParameterError("scaled positive mass exceeds 1")
    P = MarginalDistribution(tuple((x, p) for x, p in scaled.items() if p > 0) + ((d - 1, rest),))
    cf = dict(base.closed_forms)
    cf["weight_ratio_lower"] = r
    return PUInstance("sar", {"d": d, "rho": base.params["rho"], "r": r, "O": base.params["O"]},
                      base.D, P, base.cls, cf)


def cov_uni_instance(n: int, J: Iterable[int], side: str) -> PUInstance:
    """Uniform covariate-shift instance on ``n`` points.

    ``Y`` is the first third of the domain and ``Z`` the rest; points of
    ``Y ∪ J`` are positive.  ``D_X`` is uniform on ``Y ∪ J`` (side ``pos``)
    or on ``Y ∪ (Z \\ J)`` (side ``neg``), and ``P`` is uniform on ``Y ∪ J``.
    The class is ``{Y, X}``.
    """
    if n < 3 or n % 3:
        raise ParameterError("n must be a positive multiple of 3")
    third = n // 3
    Y = frozenset(range(third))
    Z = range(third, n)
    J = _subset("J", J, Z)
    if len(J) != third:
        raise ParameterError(f"|J| must be n/3 = {third}")
    if side not in ("pos", "neg"):
        raise ParameterError("side must be 'pos' or 'neg'")
    pos = sorted(Y | J)
    supp = pos if side == "pos" else sorted(Y | (frozenset(Z) - J))
    q = Fraction(1, len(supp))
    D = LabeledDiscreteDistribution(tuple((x, int(x in Y or x in J), q) for x in supp))
    P = MarginalDistribution.uniform(pos)
    alpha = Fraction(1) if side == "pos" else Fraction(1, 2)
    return PUInstance(
        "cov_uni",
        {"n": n, "J": J, "side": side},
        D,
        P,
        ConceptClass(n, (mask_of(Y), (1 << n) - 1)),
        {"alpha": alpha, "approx_error": Fraction(0),
         "weight_ratio": Fraction(1) if side == "pos" else Fraction(1, 2)},
    )


def die_weights(k: int, O: Iterable[int]) -> tuple[Fraction, Fraction]:
    """``(w_minus, w_plus)`` for a proper nonempty ``O ⊆ {1..k}``."""
    O = _subset("O", O, range(1, k + 1))
    s = len(O)
    if s == 0 or s == k:
        raise ParameterError("O must be a proper nonempty subset of the faces")
    if 2 * s <= k:
        return Fraction(1), Fraction(s, k - s)
    return Fraction(k - s, s), Fraction(1)


def _agno_atoms(k: int, rho: Fraction, O1: frozenset[int], O2: frozenset[int]):
    wm1, wp1 = die_weights(k, O1)
    wm2, wp2 = die_weights(k, O2)
    q = Fraction(1, 4 * k)
    atoms = []
    for i in range(1, k + 1):
        x1, x2 = i - 1, k + i - 1
        atoms.append((x1, 1, q))
        atoms.append((x1, 0, q * (1 - wm1 * rho) if i in O1 else q * (1 + wp1 * rho)))
        if i in O2:
            atoms.append((x2, 1, q * (1 - wm2 * rho / 2)))
            atoms.append((x2, 0, q * (1 + wm2 * rho / 2)))
        else:
            atoms.append((x2, 1, q * (1 + wp2 * rho / 2)))
            atoms.append((x2, 0, q * (1 - wp2 * rho / 2)))
    return atoms


def agno_instance(k: int, rho, O1: Iterable[int], O2: Iterable[int]) -> PUInstance:
    """Agnostic instance on ``2k`` points built from two weighted dice.

    Faces are 1-based: face ``i`` of the first die is point ``i - 1`` and
    face ``i`` of the second die is point ``k + i - 1``.  The Bayes
    classifier is ``O1`` on the first block and the complement of ``O2`` on
    the second.  ``closed_forms`` carries the per-point excess weights so
    that ``excess(c) = excess_unit * sum of weights where c disagrees with
    bayes_labels``.
    """
    if k < 2:
        raise ParameterError("k must be at least 2")
    rho = _open_unit("rho", rho)
    O1 = _subset("O1", O1, range(1, k + 1))
    O2 = _subset("O2", O2, range(1, k + 1))
    wm1, wp1 = die_weights(k, O1)
    wm2, wp2 = die_weights(k, O2)
    D = LabeledDiscreteDistribution(tuple(_agno_atoms(k, rho, O1, O2)))
    bayes = [int(i in O1) for i in range(1, k + 1)] + [int(i not in O2) for i in range(1, k + 1)]
    weights = [wm1 if i in O1 else wp1 for i in range(1, k + 1)] + \
              [wm2 if i in O2 else wp2 for i in range(1, k + 1)]
    t1, t2 = min(len(O1), k - len(O1)), min(len(O2), k - len(O2))
    return PUInstance(
        "agno",
        {"k": k, "rho": rho, "O1": O1, "O2": O2},
        D,
        D.conditional(1),
        ConceptClass.powerset(2 * k),
        {"alpha": Fraction(1, 2),
         "approx_error": Fraction(1, 2) - rho * (t1 + t2) / (4 * k),
         "excess_unit": rho / (4 * k),
         "excess_weights": weights,
         "bayes_labels": bayes},
    )


def agno_excess(inst: PUInstance, mask: int) -> Fraction:
    """Closed-form excess risk of the concept ``mask`` on an agno instance."""
    cf = inst.closed_forms
    miss = sum(
        (w for x, (w, y) in enumerate(zip(cf["excess_weights"], cf["bayes_labels"]))
         if (mask >> x) & 1 != y),
        Fraction(0),
    )
    return cf["excess_unit"] * miss


def impossibility_pair(eta) -> tuple[PUInstance, PUInstance]:
    """Two one-point instances with opposite label noise ``eta``.

    Both have ``D+ = D_X = δ_0``, so PU samples cannot tell them apart.
    """
    eta = _open_unit("eta", eta)
    cls = ConceptClass(1, (0, 1))
    out = []
    for z, p1 in ((0, eta), (1, 1 - eta)):
        D = LabeledDiscreteDistribution(((0, 1, p1), (0, 0, 1 - p1)))
        out.append(PUInstance(
            "impossibility", {"eta": eta, "z": z}, D, D.conditional(1), cls,
            {"alpha": p1, "approx_error": min(eta, 1 - eta)},
        ))
    return out[0], out[1]


def reweight(inst: PUInstance, alpha) -> PUInstance:
    """Rescale positive and negative atoms so the class prior becomes ``alpha``;
    positives are then sampled from the new ``D+``."""
    alpha = _open_unit("alpha", alpha)
    a0 = as_rational(inst.alpha)
    if not 0 < a0 < 1:
        raise ParameterError("reweighting needs both labels present")
    sp, sn = alpha / a0, (1 - alpha) / (1 - a0)
    D = LabeledDiscreteDistribution(tuple(
        (x, y, as_rational(p) * (sp if y else sn)) for x, y, p in inst.D.atoms
    ))
    params = dict(inst.params)
    params["alpha"] = alpha
    return PUInstance(f"{inst.family}_reweighted", params, D, D.conditional(1), inst.cls,
                      {"alpha": alpha})


@dataclass(frozen=True)
class DieInstance:
    k: int
    eps: Fraction
    O: frozenset[int]
    probs: tuple[Fraction, ...]

    def __post_init__(self):
        if sum(self.probs, Fraction(0)) != 1:
            raise ParameterError("face probabilities do not sum to 1")

    @property
    def faces(self) -> MarginalDistribution:
        """Face ``j`` stored at index ``j - 1``."""
        return MarginalDistribution(tuple(enumerate(self.probs)))


def die_instance(k: int, eps, O: Iterable[int]) -> DieInstance:
    eps = _open_unit("eps", eps)
    O = frozenset(O)
    wm, wp = die_weights(k, O)
    probs = tuple((1 - wm * eps) / k if j in O else (1 + wp * eps) / k for j in range(1, k + 1))
    return DieInstance(k, eps, O, probs)


def die_error(h: Iterable[int], k: int, O: Iterable[int]) -> Fraction:
    """``(1/k) (sum_{j in O} h_j w- + sum_{j not in O} (1 - h_j) w+)``.

    Zero exactly at the indicator of the complement of ``O``.
    """
    h = tuple(int(v) for v in h)
    if len(h) != k or any(v not in (0, 1) for v in h):
        raise ParameterError(f"h must be a 0/1 vector of length {k}")
    O = frozenset(O)
    wm, wp = die_weights(k, O)
    total = sum(
        (wm * h[j - 1] if j in O else wp * (1 - h[j - 1]) for j in range(1, k + 1)),
        Fraction(0),
    )
    return total / k


def roll_die(die: DieInstance, m: int, seed: int) -> np.ndarray:
    """``m`` faces in ``1..k``."""
    return draw(die.faces, m, seed).items + 1


def random_proper_subset(k: int, rng: np.random.Generator) -> frozenset[int]:
    """Uniform draw from the proper nonempty subsets of ``{1..k}``."""
    while True:
        bits = rng.integers(0, 2, size=k)
        if 0 < bits.sum() < k:
            return frozenset(int(j) + 1 for j in np.flatnonzero(bits))


@dataclass(frozen=True, eq=False)
class LeftRightReduction:
    """PU samples built from a Left/Right triple.

    ``Y`` holds the fresh indices ``n .. n + n/2 - 1`` that pad both samples.
    """

    S_P: Sample
    S_U: Sample
    held_out: int
    Y: tuple[int, ...]
    tails_unlabeled: int
    tails_positive: int

    def decide(self, h) -> str:
        """``"left"`` iff the hypothesis labels the held-out point 0."""
        return "left" if int(h(self.held_out)) == 0 else "right"


def _coin_padding(rng: np.random.Generator, heads: int, Y: np.ndarray) -> list[int]:
    out = []
    seen = 0
    while seen < heads:
        if rng.integers(0, 2) == 1:
            seen += 1
        else:
            out.append(int(Y[rng.integers(0, len(Y))]))
    return out


def left_right_to_pu(L, R, M, n: int, seed: int) -> LeftRightReduction:
    """Turn a Left/Right triple over ``{0..n-1}`` into a PU input.

    Pads the unlabeled side until ``|M| - 1`` heads and the positive side
    until ``|L|`` heads, drawing a uniform ``Y`` point on every tail, then
    moves a uniformly chosen point of ``M`` out as the query.
    """
    L, R, M = (np.asarray(getattr(s, "items", s), dtype=np.int64) for s in (L, R, M))
    if n < 2 or n % 2:
        raise ParameterError("n must be a positive even number")
    if len(L) != len(R):
        raise ParameterError("L and R must have the same size")
    if len(M) == 0:
        raise ParameterError("M must be nonempty")
    for name, s in (("L", L), ("R", R), ("M", M)):
        if s.size and (s.min() < 0 or s.max() >= n):
            raise ParameterError(f"{name} leaves the domain 0..{n - 1}")
    if set(L.tolist()) & set(R.tolist()):
        raise ParameterError("L and R must have disjoint supports")
    Y = np.arange(n, n + n // 2)
    rng = generator(seed)
    I_U = _coin_padding(rng, len(M) - 1, Y)
    I_P = _coin_padding(rng, len(L), Y)
    j = int(rng.integers(0, len(M)))
    rest = np.delete(M, j).tolist()
    return LeftRightReduction(
        S_P=sample_from_items(R.tolist() + I_P, seed),
        S_U=sample_from_items(rest + I_U, seed),
        held_out=int(M[j]),
        Y=tuple(Y.tolist()),
        tails_unlabeled=len(I_U),
        tails_positive=len(I_P),
    )


# Two columns of positives left of x = 0.3, negatives right of x = 0.85.
_GEO_POS = [(x, y) for x in (0.05, 0.3) for y in (0.1, 0.35, 0.6, 0.85)]
_GEO_NEG = [(x, y) for x in (0.85, 0.95) for y in (0.25, 0.75)]


def geo_margin_instance() -> GeometricInstance:
    """Box-realizable 2-D instance with margin 0.25 and shifted positives.

    Eight positives (total mass 3/5) occupy distinct grid cells; ``P`` puts
    half or one and a half times their ``D+`` weight on them in a
    checkerboard, so the cell-wise weight ratio is exactly 1/2.
    """
    coords = np.array(_GEO_POS + _GEO_NEG)
    n_pos = len(_GEO_POS)
    atoms = [(i, 1, Fraction(3, 40)) for i in range(n_pos)] + \
            [(n_pos + j, 0, Fraction(1, 10)) for j in range(len(_GEO_NEG))]
    D = LabeledDiscreteDistribution(tuple(atoms))
    P = MarginalDistribution(tuple(
        (i, Fraction(1, 16) if i % 2 == 0 else Fraction(3, 16)) for i in range(n_pos)
    ))
    return GeometricInstance(
        coords, D, P, gamma=0.25, pi=0.5, family="geo_margin",
        params={"gamma": 0.25, "pi": 0.5},
        closed_forms={"alpha": Fraction(3, 5), "approx_error": Fraction(0),
                      "weight_ratio": Fraction(1, 2)},
    )


def geo_filter_instance(extra_mass=Fraction(1, 5)) -> GeometricInstance:
    """:func:`geo_margin_instance` with ``extra_mass`` of ``P`` moved to a
    point at (0.6, 0.5), whose grid cell carries no ``D_X`` mass."""
    base = geo_margin_instance()
    q = as_rational(extra_mass)
    if not 0 < q < 1:
        raise ParameterError("extra_mass must lie in (0, 1)")
    extra = base.n_points
    coords = np.vstack([base.coords, [[0.6, 0.5]]])
    P = MarginalDistribution(tuple((x, (1 - q) * p) for x, p in base.P.atoms) + ((extra, q),))
    return GeometricInstance(
        coords, base.D, P, gamma=base.gamma, pi=base.pi, family="geo_filter",
        params={"gamma": base.gamma, "pi": base.pi, "extra_mass": q},
        closed_forms={"alpha": Fraction(3, 5), "approx_error": Fraction(0),
                      "stray_mass": q},
    )


def geometric_to_json(inst: GeometricInstance) -> dict:
    return {
        "family": inst.family,
        "params": _jsonable(inst.params),
        "D": inst.D.to_json(),
        "P": inst.P.to_json(),
        "class": None,
        "closed_forms": _jsonable(inst.closed_forms),
        "coords": inst.coords.tolist(),
        "gamma": inst.gamma,
        "pi": inst.pi,
    }


def geometric_from_json(obj: dict) -> GeometricInstance:
    return GeometricInstance(
        np.asarray(obj["coords"], dtype=float),
        LabeledDiscreteDistribution.from_json(obj["D"]),
        MarginalDistribution.from_json(obj["P"]),
        gamma=float(obj["gamma"]),
        pi=float(obj.get("pi", 0.0)),
        family=obj.get("family", "geometric"),
        params=dict(obj.get("params", {})),
        closed_forms=dict(obj.get("closed_forms", {})),
    )


def instance_to_json(inst) -> dict:
    if isinstance(inst, GeometricInstance):
        return geometric_to_json(inst)
    return inst.to_json()


def load_instance(obj):
    """Rebuild a finite or geometric instance from its JSON form."""
    if isinstance(obj, str):
        obj = json.loads(obj)
    if obj.get("coords") is not None:
        return geometric_from_json(obj)
    return PUInstance.from_json(obj)


def _ints(v) -> list[int]:
    if v is None or v == "":
        return []
    if isinstance(v, str):
        return [int(t) for t in v.split(",") if t.strip()]
    return [int(t) for t in v]


# Builders keyed by family name; each takes a flat dict of parameters.
FAMILIES = {
    "scar_pos": lambda p: scar_pos_instance(int(p["d"]), p["rho"], _ints(p.get("O"))),
    "two_point": lambda p: two_point_instance(p["eps"], int(p["z"])),
    "claw": lambda p: claw_instance(int(p["m"]), int(p["h"]), _ints(p["O"]), p["rho"]),
    "sar": lambda p: sar_instance(int(p["d"]), p["rho"], p["r"], _ints(p.get("O"))),
    "cov_uni": lambda p: cov_uni_instance(int(p["n"]), _ints(p["J"]), p["side"]),
    "agno": lambda p: agno_instance(int(p["k"]), p["rho"], _ints(p["O1"]), _ints(p["O2"])),
    "geo_margin": lambda p: geo_margin_instance(),
    "geo_filter": lambda p: geo_filter_instance(p.get("extra_mass", Fraction(1, 5))),
}
