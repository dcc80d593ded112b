from fractions import Fraction

import pytest

from pulab.bounds import (
    BOUNDS,
    UnknownBoundError,
    epsnet_transfer_counterexamples,
    lagrangian_factor_value,
    verify_bound,
)
from pulab.rng import generator

F = Fraction


class TestFactor:
    def test_symmetric_prior(self):
        assert lagrangian_factor_value(F(1, 2), 1) == 1

    def test_skewed_prior(self):
        assert lagrangian_factor_value(F(1, 4), 1) == 3
        assert lagrangian_factor_value(F(1, 4), F(1, 2)) == 1


class TestRegistry:
    def test_registered_ids(self):
        assert set(BOUNDS) == {"scar_perm_upper", "sar_perm_upper", "alg1_upper", "lagrangian_factor",
                               "lagrangian_known_alpha", "apds_bound", "no_alpha_impossibility",
                               "die_lower", "claw_vcd_remark", "cdc_vcd_corollary", "epsnet_transfer"}

    def test_unknown(self):
        with pytest.raises(UnknownBoundError):
            verify_bound("nope")

    def test_report_json(self):
        obj = verify_bound("no_alpha_impossibility").to_json()
        assert set(obj) == {"bound_id", "lhs", "rhs", "pass", "details"}
        assert obj["pass"] is True and obj["lhs"] == pytest.approx(0.7)


class TestApds:
    def test_no_shift_has_zero_distance(self):
        rep = verify_bound("apds_bound", {"trials": 40, "b": 500})
        assert rep.details["cdc_distance"] == 0 and rep.details["lambda_P"] == 0

    def test_shift_raises_distance(self):
        rep = verify_bound("apds_bound", {"trials": 40, "b": 500, "shift": 0.5})
        assert rep.details["cdc_distance"] > 0


class TestCombinatorialChecks:
    def test_small_runs(self):
        for bid in ("claw_vcd_remark", "cdc_vcd_corollary"):
            assert verify_bound(bid, {"count": 30}).passed

    def test_epsnet_single_triple(self):
        bad, checked = epsnet_transfer_counterexamples(generator(3))
        assert bad == [] and checked > 0
