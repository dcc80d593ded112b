from fractions import Fraction
from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_class
from pulab.concept_core import ConceptClass, DomainError
from pulab.learners import (
    EMPTY_BOX,
    Box,
    ConceptHypothesis,
    Constant,
    InfeasibleError,
    algorithm1,
    cell_of,
    die_learner_L0,
    grid_cells,
    hypothesis_from_json,
    hypothesis_to_json,
    lagrangian_finite,
    lagrangian_losses,
    perm_box,
    perm_finite,
)

F = Fraction


@st.composite
def class_and_samples(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    masks = draw(st.sets(st.integers(0, 2 ** n - 1), min_size=1, max_size=16))
    S_P = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=6))
    S_U = draw(st.lists(st.integers(0, n - 1), min_size=1, max_size=10))
    return ConceptClass(n, tuple(masks)), S_P, S_U


class TestPermFinite:
    def test_single_full_concept(self):
        C = ConceptClass(3, (7,))
        assert perm_finite(C, [0, 2], [1, 1]).mask == 7

    def test_fewest_unlabeled_hits(self):
        C = ConceptClass.from_sets(3, [[0], [0, 1], [0, 1, 2]])
        assert perm_finite(C, [0], [1, 1, 2]).members == {0}

    def test_canonical_tie_break(self):
        C = ConceptClass.from_sets(2, [[1], [0]])
        assert perm_finite(C, [], []).members == {0}

    def test_infeasible(self):
        with pytest.raises(InfeasibleError):
            perm_finite(ConceptClass.from_sets(2, [[0]]), [1], [])

    def test_out_of_domain(self):
        with pytest.raises(DomainError):
            perm_finite(ConceptClass.powerset(2), [3], [])

    @given(class_and_samples())
    @settings(max_examples=100)
    def test_matches_oracle(self, data):
        C, S_P, S_U = data
        want = oracles.perm(C.sets(), S_P, S_U)
        if want is None:
            with pytest.raises(InfeasibleError):
                perm_finite(C, S_P, S_U)
        else:
            got = perm_finite(C, S_P, S_U)
            assert got.members == want
            assert set(S_P) <= got.members


class TestLagrangian:
    def test_forced_losses(self):
        C = ConceptClass(2, (0, 3))
        assert lagrangian_losses(C, [0, 1], [0, 1, 1], F(1, 3)) == [F(1, 3), F(1)]

    def test_hand_tie(self):
        C = ConceptClass.from_sets(2, [[0], [0, 1]])
        assert lagrangian_losses(C, [0, 1], [0, 1], 1) == [1, 1]
        assert lagrangian_finite(C, [0, 1], [0, 1], 1).members == {0}

    @pytest.mark.parametrize("S_P,S_U,gamma", [([], [0], 1), ([0], [], 1), ([0], [0], -1)])
    def test_preconditions(self, S_P, S_U, gamma):
        with pytest.raises(ValueError):
            lagrangian_finite(ConceptClass.powerset(2), S_P, S_U, gamma)

    @given(class_and_samples(), st.fractions(0, 5))
    @settings(max_examples=100)
    def test_matches_oracle(self, data, gamma):
        C, S_P, S_U = data
        assert lagrangian_finite(C, S_P, S_U, gamma).members == oracles.lagrangian(C.sets(), S_P, S_U, gamma)

    @given(class_and_samples())
    def test_gamma_zero_ignores_positives(self, data):
        C, S_P, S_U = data
        got = lagrangian_finite(C, S_P, S_U, 0)
        hits = [sum(u in c for u in S_U) for c in C.sets()]
        assert got.index == hits.index(min(hits))

    def test_large_gamma_is_consistent(self, rng):
        for _ in range(60):
            C = random_class(rng, max_n=7)
            c = C.sets()[int(rng.integers(len(C)))]
            if not c:
                continue
            S_P = rng.choice(sorted(c), size=4).tolist()
            S_U = rng.integers(0, C.n, size=8).tolist()
            got = lagrangian_finite(C, S_P, S_U, 1000)
            assert set(S_P) <= got.members

    @given(class_and_samples(), st.fractions(0, 4), st.integers(1, 5))
    @settings(max_examples=60)
    def test_argmin_scale_invariant(self, data, gamma, t):
        # Repeating both samples t times scales each loss term by the same factor.
        C, S_P, S_U = data
        a = lagrangian_finite(C, S_P, S_U, gamma)
        b = lagrangian_finite(C, S_P * t, S_U * t, gamma)
        assert a.index == b.index

    def test_float_gamma(self):
        C = ConceptClass.from_sets(2, [[0], [0, 1]])
        assert lagrangian_finite(C, [0, 1], [0, 1], 0.3).members == {0}


def grid_minimum(S_prime, S_U, grid):
    best = None
    for lo in product(grid, repeat=2):
        for hi in product(grid, repeat=2):
            if lo[0] > hi[0] or lo[1] > hi[1]:
                continue
            box = Box(lo, hi)
            if len(S_prime) and not box.contains(S_prime).all():
                continue
            hits = int(box.contains(S_U).sum()) if len(S_U) else 0
            best = hits if best is None else min(best, hits)
    return best


class TestPermBox:
    def test_bounding_box(self):
        h = perm_box([(0.2, 0.3), (0.5, 0.6)])
        assert (h.lo, h.hi) == ((0.2, 0.3), (0.5, 0.6))

    def test_empty(self):
        h = perm_box(np.zeros((0, 2)))
        assert h is EMPTY_BOX and h((0.5, 0.5)) == 0

    def test_single_point_hits(self):
        U = np.array([(0.4, 0.4), (0.1, 0.9), (0.7, 0.2)])
        h = perm_box([(0.4, 0.4)], U)
        assert h.contains(U).sum() == 1

    def test_dimension_mismatch(self):
        with pytest.raises(DomainError):
            perm_box([(0.1, 0.2)], [(0.1, 0.2, 0.3)])

    def test_minimal_against_grid_boxes(self, rng):
        grid = [i / 4 for i in range(5)]
        pts = np.array(list(product(grid, repeat=2)))
        for _ in range(25):
            Sp = pts[rng.choice(len(pts), size=int(rng.integers(0, 4)), replace=False)]
            Su = pts[rng.choice(len(pts), size=6)]
            h = perm_box(Sp, Su)
            assert int(h.contains(Su).sum()) == grid_minimum(Sp, Su, grid)

    def test_invalid_box(self):
        with pytest.raises(DomainError):
            Box((0.5,), (0.1,))


class TestAlgorithm1:
    def test_cells(self):
        assert grid_cells(0.5, 1) == 2
        assert grid_cells(0.25, 2) == 6
        with pytest.raises(ValueError):
            grid_cells(0, 2)

    def test_last_cell_closed(self):
        assert cell_of([[0.5], [1.0], [0.49]], 2).tolist() == [1, 1, 0]

    def test_one_dimensional_example(self):
        res = algorithm1([[0.6], [0.2]], [[0.1]], 0.5, 1)
        assert res.filtered_count == 1
        assert res.kept.tolist() == [[0.2]]
        assert (res.hypothesis.lo, res.hypothesis.hi) == ((0.2,), (0.2,))
        assert res.boxes_hit == 1

    def test_no_positives(self):
        res = algorithm1(np.zeros((0, 2)), [[0.1, 0.1]], 0.5, 2)
        assert res.hypothesis is EMPTY_BOX and res.filtered_count == 0

    def test_identity_filter(self):
        P = [[0.1, 0.1], [0.8, 0.9]]
        res = algorithm1(P, [[0.12, 0.05], [0.85, 0.85]], 0.5, 2)
        assert res.filtered_count == 0
        assert res.hypothesis == perm_box(P)

    def test_everything_filtered_predicts_zero(self, rng):
        P = rng.random((20, 2)) * 0.3
        res = algorithm1(P, [[0.9, 0.9]], 0.25, 2)
        assert res.filtered_count == 20
        assert not res.hypothesis.contains(rng.random((50, 2))).any()

    def test_outside_cube(self):
        with pytest.raises(DomainError):
            algorithm1([[1.2]], [[0.1]], 0.5, 1)


class TestDieLearner:
    def test_single_face(self):
        assert die_learner_L0([1, 1, 1, 1], 2) == (1, 0)

    def test_uniform_counts(self):
        assert die_learner_L0([1, 2, 3], 3) == (0, 0, 0)

    def test_strict_threshold(self):
        assert die_learner_L0([1, 1, 2, 3], 4) == (1, 0, 0, 0)

    def test_domain(self):
        with pytest.raises(DomainError):
            die_learner_L0([0], 3)
        with pytest.raises(ValueError):
            die_learner_L0([], 3)


class TestHypothesisJson:
    def test_round_trips(self):
        C = ConceptClass.powerset(2)
        for h in (ConceptHypothesis(C, 2), Box((0.1, 0.2), (0.3, 0.4)), Constant(1), EMPTY_BOX):
            assert hypothesis_from_json(hypothesis_to_json(h), C) == h

    def test_tags(self):
        assert hypothesis_to_json(Constant(0)) == {"kind": "const", "value": 0}
        assert hypothesis_to_json(Box((0.0,), (1.0,))) == {"kind": "box", "lo": [0.0], "hi": [1.0]}

    def test_unknown_kind(self):
        with pytest.raises(ValueError):
            hypothesis_from_json({"kind": "ellipse"})
