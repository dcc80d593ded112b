"""Registered inequality checks with exact right-hand sides.

Each check returns a :class:`BoundReport`.  Right-hand quantities (class
prior, approximation error, ``lambda^P``, ``C△C`` distance) are exact;
left-hand quantities are measured over seeded trials and judged with
one-sided binomial tests, never against an unstated constant.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

import numpy as np

from .concept_core import (
    ConceptClass,
    claw_number_certified,
    symmetric_difference_class,
    vc_dimension,
)
from .dist_core import (
    MarginalDistribution,
    b_distance,
    error_metrics,
    source_metrics,
    weight_ratio,
)
from .hard_instances import (
    PUInstance,
    agno_instance,
    die_error,
    die_instance,
    geo_filter_instance,
    geo_margin_instance,
    impossibility_pair,
    random_proper_subset,
    reweight,
    roll_die,
    sar_instance,
    scar_pos_instance,
)
from .harness import (
    ExperimentConfig,
    Learner,
    exceeds_rate,
    fitted_threshold,
    run_cell,
    run_trial,
    sweep_sample_complexity,
)
from .learners import algorithm1, die_learner_L0
from .rng import DEFAULT_SEED, derive_seed, generator

__all__ = ["BoundReport", "UnknownBoundError", "BOUNDS", "verify_bound",
           "lagrangian_factor_value", "random_class"]


class UnknownBoundError(KeyError):
    pass


@dataclass
class BoundReport:
    bound_id: str
    lhs: object
    rhs: object
    passed: bool
    details: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"bound_id": self.bound_id, "lhs": _plain(self.lhs), "rhs": _plain(self.rhs),
                "pass": bool(self.passed), "details": _plain(self.details)}


def _plain(v):
    if isinstance(v, Fraction):
        return float(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    return v


def lagrangian_factor_value(alpha, gamma) -> Fraction:
    """``max((gamma - alpha)/alpha, alpha/(gamma - alpha))`` for ``gamma > alpha``."""
    alpha, gamma = Fraction(alpha), Fraction(gamma)
    if not gamma > alpha > 0:
        raise ValueError("the factor needs 0 < alpha < gamma")
    return max((gamma - alpha) / alpha, alpha / (gamma - alpha))


def _opt(cfg: dict, key, default):
    v = cfg.get(key)
    return default if v is None else v


def _agno_default(cfg) -> PUInstance:
    return agno_instance(int(_opt(cfg, "k", 3)), _opt(cfg, "rho", Fraction(1, 5)),
                         _opt(cfg, "o1", [1]), _opt(cfg, "o2", [1, 2]))


def _rate_check(bound_id, records, ok, target, extra) -> BoundReport:
    good = sum(bool(ok(r)) for r in records)
    rejected, pv = exceeds_rate(good, len(records), target)
    details = {"successes": good, "trials": len(records), "p_value": pv}
    details.update(extra)
    return BoundReport(bound_id, good / len(records), target, rejected, details)


def _check_no_alpha(cfg) -> BoundReport:
    eta = Fraction(_opt(cfg, "eta", Fraction(3, 10)))
    b, a = int(_opt(cfg, "b", 10)), int(_opt(cfg, "a", 10))
    seed = int(_opt(cfg, "seed", DEFAULT_SEED))
    pair = impossibility_pair(eta)
    ratio = max(eta, 1 - eta) / min(eta, 1 - eta)
    rhs = ratio * min(eta, 1 - eta)
    worst = {}
    for name in ("perm", "lagrangian:1", "lagrangian:3/5"):
        errs = [run_trial(inst, name, b, a, seed).err for inst in pair]
        worst[name] = max(errs)
    # Algorithm 1 on the point embedded at 1/2 of the unit interval.
    h = algorithm1(np.full((b, 1), 0.5), np.full((a, 1), 0.5), 0.5, 1).hypothesis
    worst["algorithm1:0.5"] = max(
        error_metrics(inst.D, lambda x: int(h(np.array([0.5])))).err for inst in pair
    )
    lhs = min(worst.values())
    passed = all(v == max(eta, 1 - eta) and v >= rhs for v in worst.values())
    return BoundReport("no_alpha_impossibility", lhs, rhs, passed,
                       {"eta": eta, "worst_error": worst, "factor": ratio})


def _check_known_alpha(cfg) -> BoundReport:
    inst = _agno_default(cfg)
    eps = float(_opt(cfg, "eps", 0.1))
    delta = float(_opt(cfg, "delta", 0.1))
    b = int(_opt(cfg, "b", 2000))
    a = int(_opt(cfg, "a", b))
    gamma = 2 * inst.alpha
    recs = run_cell(inst, Learner("lagrangian", gamma), b, a, int(_opt(cfg, "trials", 200)),
                    int(_opt(cfg, "seed", DEFAULT_SEED)), int(_opt(cfg, "jobs", 1)))
    return _rate_check("lagrangian_known_alpha", recs, lambda r: r.excess <= 6 * eps,
                       1 - delta, {"gamma": gamma, "eps": eps, "alpha": inst.alpha,
                                   "max_excess": max(r.excess for r in recs)})


def _check_factor(cfg) -> BoundReport:
    base = str(_opt(cfg, "base", "agno"))
    if base == "agno":
        inst = _agno_default(cfg)
    elif base == "scar_pos":
        inst = scar_pos_instance(int(_opt(cfg, "d", 10)), _opt(cfg, "rho", Fraction(3, 10)),
                                 _opt(cfg, "o", [0, 1, 2, 3]))
    else:
        raise ValueError(f"unknown base family {base!r}")
    if cfg.get("alpha") is not None:
        inst = reweight(inst, cfg["alpha"])
    eps = float(_opt(cfg, "eps", 0.1))
    delta = float(_opt(cfg, "delta", 0.1))
    gamma = Fraction(_opt(cfg, "gamma", 1))
    b = int(_opt(cfg, "b", 2000))
    a = int(_opt(cfg, "a", b))
    alpha = inst.alpha
    factor = lagrangian_factor_value(alpha, gamma)
    bound = factor * (inst.approx_error + 2 * (1 + gamma) * Fraction(repr(eps)))
    recs = run_cell(inst, Learner("lagrangian", gamma), b, a, int(_opt(cfg, "trials", 200)),
                    int(_opt(cfg, "seed", DEFAULT_SEED)), int(_opt(cfg, "jobs", 1)))
    return _rate_check("lagrangian_factor", recs, lambda r: r.err <= bound, 1 - delta,
                       {"alpha": alpha, "factor": factor, "approx_error": inst.approx_error,
                        "bound": bound, "family": inst.family,
                        "max_err": max(r.err for r in recs)})


def _check_apds(cfg) -> BoundReport:
    inst = _agno_default(cfg)
    shift = Fraction(_opt(cfg, "shift", 0))
    if shift:
        d_plus = inst.D.conditional(1).pmf
        n = inst.cls.n
        P = MarginalDistribution(tuple(
            (x, (1 - shift) * d_plus.get(x, 0) + shift / n) for x in range(n)))
        inst = PUInstance(inst.family, dict(inst.params, shift=shift), inst.D, P, inst.cls,
                          inst.closed_forms)
    eps = Fraction(repr(float(_opt(cfg, "eps", 0.1))))
    delta = float(_opt(cfg, "delta", 0.1))
    gamma = Fraction(_opt(cfg, "gamma", 1))
    alpha = inst.alpha
    factor = lagrangian_factor_value(alpha, gamma)
    lam = source_metrics(inst.cls, inst.D, inst.P).lambda_P
    dist = b_distance(symmetric_difference_class(inst.cls).concepts, inst.P,
                      inst.D.conditional(1))
    bound = factor * (inst.approx_error + 2 * (1 + gamma) * eps + 2 * gamma * (lam + dist))
    b = int(_opt(cfg, "b", 2000))
    recs = run_cell(inst, Learner("lagrangian", gamma), b, int(_opt(cfg, "a", b)),
                    int(_opt(cfg, "trials", 200)), int(_opt(cfg, "seed", DEFAULT_SEED)),
                    int(_opt(cfg, "jobs", 1)))
    return _rate_check("apds_bound", recs, lambda r: r.err <= bound, 1 - 4 * delta,
                       {"lambda_P": lam, "cdc_distance": dist, "factor": factor,
                        "bound": bound, "shift": shift})


def _scar_thresholds(cfg) -> dict:
    d = int(_opt(cfg, "d", 10))
    rho = _opt(cfg, "rho", Fraction(3, 10))
    O = _opt(cfg, "o", [0, 1, 2, 3])
    eps_values = tuple(_opt(cfg, "eps_values", (0.05, 0.1)))
    conf = ExperimentConfig(
        family="scar_pos", params={"d": d, "rho": rho, "O": O}, learner="perm",
        b_grid=tuple(_opt(cfg, "grid", (25, 50, 100, 200, 400, 800))), paired=True,
        eps=max(eps_values), delta=float(_opt(cfg, "delta", 0.1)),
        trials=int(_opt(cfg, "trials", 2000)), seed=int(_opt(cfg, "seed", DEFAULT_SEED)))
    rows = sweep_sample_complexity(conf, eps_values, jobs=int(_opt(cfg, "jobs", 1)))
    fits = {e: fitted_threshold([r for r in rows if r.eps == e], conf.delta) for e in eps_values}
    return {"config": conf, "rows": rows, "fits": fits}


def _check_scar_perm(cfg) -> BoundReport:
    out = _scar_thresholds(cfg)
    fits = out["fits"]
    small, large = min(fits), max(fits)
    ratio = fits[small].value / fits[large].value
    lo, hi = _opt(cfg, "ratio_range", (1.6, 2.6))
    censored = any(f.censored for f in fits.values())
    return BoundReport("scar_perm_upper", ratio, [lo, hi],
                       (not censored) and lo <= ratio <= hi,
                       {"thresholds": {str(e): f.value for e, f in fits.items()},
                        "censored": {str(e): f.censored for e, f in fits.items()}})


def sar_thresholds(cfg) -> dict:
    d = int(_opt(cfg, "d", 10))
    rho = _opt(cfg, "rho", Fraction(3, 10))
    O = _opt(cfg, "o", [0, 1, 2, 3])
    grid = tuple(_opt(cfg, "grid", sorted({round(2 ** (i / 2)) for i in range(6, 19)})))
    a = int(_opt(cfg, "a", 200))
    fits = {}
    for r in _opt(cfg, "r_values", (Fraction(1), Fraction(1, 2), Fraction(1, 4))):
        r = Fraction(r)
        conf = ExperimentConfig(learner="perm", b_grid=grid, a_grid=(a,),
                                eps=float(_opt(cfg, "eps", 0.1)),
                                delta=float(_opt(cfg, "delta", 0.1)),
                                trials=int(_opt(cfg, "trials", 1000)),
                                seed=int(_opt(cfg, "seed", DEFAULT_SEED)))
        rows = sweep_sample_complexity(conf, inst=sar_instance(d, rho, r, O),
                                       jobs=int(_opt(cfg, "jobs", 1)))
        fits[r] = fitted_threshold(rows, conf.delta)
    return fits


def _check_sar_perm(cfg) -> BoundReport:
    fits = sar_thresholds(cfg)
    rs = sorted(fits, reverse=True)
    values = [fits[r].value for r in rs]
    monotone = all(x <= y for x, y in zip(values, values[1:]))
    ratio = values[-1] / values[0]
    lo, hi = _opt(cfg, "ratio_range", (2.5, 6.5))
    censored = any(f.censored for f in fits.values())
    return BoundReport("sar_perm_upper", ratio, [lo, hi],
                       monotone and not censored and lo <= ratio <= hi,
                       {"thresholds": {str(r): fits[r].value for r in rs},
                        "monotone": monotone})


def _check_alg1(cfg) -> BoundReport:
    inst = geo_margin_instance()
    eps = float(_opt(cfg, "eps", 0.1))
    delta = float(_opt(cfg, "delta", 0.1))
    b, a = int(_opt(cfg, "b", 500)), int(_opt(cfg, "a", 2000))
    seed = int(_opt(cfg, "seed", DEFAULT_SEED))
    learner = Learner("algorithm1", inst.gamma)
    recs = run_cell(inst, learner, b, a, int(_opt(cfg, "trials", 200)), seed,
                    int(_opt(cfg, "jobs", 1)))
    stray = run_trial(geo_filter_instance(), learner, b, a, derive_seed(seed, "filter"))
    report = _rate_check("alg1_upper", recs, lambda r: r.excess <= eps, 1 - delta,
                         {"cell_weight_ratio": inst.cell_weight_ratio(),
                          "filtered_on_stray_instance": stray.diagnostics["filtered_count"]})
    report.passed = report.passed and stray.diagnostics["filtered_count"] >= 1
    return report


def _check_die(cfg) -> BoundReport:
    k = int(_opt(cfg, "k", 32))
    eps = Fraction(repr(float(_opt(cfg, "eps", 0.2))))
    trials = int(_opt(cfg, "trials", 10_000))
    seed = int(_opt(cfg, "seed", DEFAULT_SEED))
    m = k * int(1 / (2 * eps * eps))
    threshold = Fraction(1, 160)
    hits = 0
    for i in range(trials):
        rng = generator(derive_seed(seed, "die", i))
        O = random_proper_subset(k, rng)
        rolls = roll_die(die_instance(k, eps, O), m, derive_seed(seed, "rolls", i))
        hits += die_error(die_learner_L0(rolls, k), k, O) >= threshold
    rejected, pv = exceeds_rate(hits, trials, 1 / 320)
    return BoundReport("die_lower", hits / trials, 1 / 320, rejected,
                       {"k": k, "eps": eps, "rolls": m, "trials": trials, "p_value": pv})


def random_class(rng: np.random.Generator, max_n: int = 10, max_size: int = 40) -> ConceptClass:
    n = int(rng.integers(1, max_n + 1))
    size = int(rng.integers(1, min(1 << n, max_size) + 1))
    masks = rng.choice(1 << n, size=size, replace=False)
    return ConceptClass(n, tuple(int(m) for m in masks))


def _classes(cfg):
    rng = generator(derive_seed(int(_opt(cfg, "seed", DEFAULT_SEED)), "classes"))
    return [random_class(rng, int(_opt(cfg, "max_n", 10))) for _ in range(int(_opt(cfg, "count", 200)))]


def _check_claw_vcd(cfg) -> BoundReport:
    violations, checked = [], 0
    for C in _classes(cfg):
        h = claw_number_certified(C, C.n)
        if C.n >= 2 * h:
            checked += 1
            if h > vc_dimension(C):
                violations.append(C.to_json())
    return BoundReport("claw_vcd_remark", len(violations), 0, not violations,
                       {"checked": checked, "violations": violations[:5]})


def _check_cdc_vcd(cfg) -> BoundReport:
    violations = []
    for C in _classes(cfg):
        if vc_dimension(symmetric_difference_class(C)) > 2 * vc_dimension(C) + 1:
            violations.append(C.to_json())
    return BoundReport("cdc_vcd_corollary", len(violations), 0, not violations,
                       {"classes": int(_opt(cfg, "count", 200)), "violations": violations[:5]})


def _random_rational_dist(rng, points, full_support: bool) -> MarginalDistribution:
    w = rng.integers(1 if full_support else 0, 10, size=len(points))
    if w.sum() == 0:
        w[rng.integers(len(points))] = 1
    tot = int(w.sum())
    return MarginalDistribution(tuple((p, Fraction(int(v), tot)) for p, v in zip(points, w)))


def epsnet_transfer_counterexamples(rng, n_points=8, max_net=6,
                                    eps_values=(Fraction(1, 8), Fraction(1, 4), Fraction(1, 2))):
    """Counterexamples to the net transfer on one random triple.

    Set masses are computed once; a net check is then a bitmask test.
    """
    points = list(range(n_points))
    n_sets = int(rng.integers(1, 16))
    B = [int(m) for m in rng.integers(1, 1 << n_points, size=n_sets)]
    Q1 = _random_rational_dist(rng, points, True)
    Q2 = _random_rational_dist(rng, points, False)
    R = weight_ratio(B, Q1, Q2)
    m1 = [Q1.mass(A) for A in B]
    m2 = [Q2.mass(A) for A in B]
    nets = [sum(1 << x for x in N) for k in range(max_net + 1) for N in combinations(points, k)]
    bad = []
    for eps in eps_values:
        heavy1 = [A for A, q in zip(B, m1) if q >= R * eps]
        heavy2 = [A for A, q in zip(B, m2) if q >= eps]
        for N in nets:
            if all(A & N for A in heavy1) and not all(A & N for A in heavy2):
                bad.append((N, eps))
    return bad, len(nets) * len(eps_values)


def _check_epsnet(cfg) -> BoundReport:
    rng = generator(derive_seed(int(_opt(cfg, "seed", DEFAULT_SEED)), "epsnet"))
    triples = int(_opt(cfg, "triples", 1000))
    bad, checked = 0, 0
    for _ in range(triples):
        found, n = epsnet_transfer_counterexamples(rng)
        bad += len(found)
        checked += n
    return BoundReport("epsnet_transfer", bad, 0, bad == 0,
                       {"triples": triples, "net_checks": checked})


BOUNDS = {
    "scar_perm_upper": _check_scar_perm,
    "sar_perm_upper": _check_sar_perm,
    "alg1_upper": _check_alg1,
    "lagrangian_factor": _check_factor,
    "lagrangian_known_alpha": _check_known_alpha,
    "apds_bound": _check_apds,
    "no_alpha_impossibility": _check_no_alpha,
    "die_lower": _check_die,
    "claw_vcd_remark": _check_claw_vcd,
    "cdc_vcd_corollary": _check_cdc_vcd,
    "epsnet_transfer": _check_epsnet,
}


def verify_bound(bound_id: str, config: dict | None = None) -> BoundReport:
    """Run the registered check ``bound_id`` with optional overrides."""
    if bound_id not in BOUNDS:
        raise UnknownBoundError(f"unknown bound {bound_id!r}; choose from {sorted(BOUNDS)}")
    return BOUNDS[bound_id](dict(config or {}))
