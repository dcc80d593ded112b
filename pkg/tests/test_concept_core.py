import json
from itertools import combinations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles
from conftest import random_class
from pulab.concept_core import (
    ConceptClass,
    DomainError,
    claw_certificate,
    claw_number_certified,
    indices_of,
    intersection_closure,
    mask_of,
    project,
    symmetric_difference_class,
    vc_dimension,
)


def fs(*xs):
    return frozenset(xs)


@st.composite
def classes(draw, max_n=6):
    n = draw(st.integers(1, max_n))
    masks = draw(st.sets(st.integers(0, 2 ** n - 1), min_size=1, max_size=20))
    return ConceptClass(n, tuple(masks))


class TestConceptClass:
    def test_canonical_order_and_dedup(self):
        C = ConceptClass(3, (5, 1, 5, 0))
        assert C.concepts == (0, 1, 5)

    def test_member_outside_domain_rejected(self):
        with pytest.raises(DomainError):
            ConceptClass(2, (4,))

    def test_empty_domain_rejected(self):
        with pytest.raises(DomainError):
            ConceptClass(0, ())

    def test_json_round_trip(self):
        C = ConceptClass.from_sets(4, [[0, 2], [1], []])
        obj = json.loads(json.dumps(C.to_json()))
        assert obj == {"n": 4, "concepts": [[], [1], [0, 2]]}
        assert ConceptClass.from_json(obj) == C

    def test_membership_matrix(self):
        C = ConceptClass.from_sets(3, [[0, 2]])
        assert C.membership.tolist() == [[True, False, True]]

    def test_mask_helpers(self):
        assert mask_of([0, 3]) == 9
        assert indices_of(9) == (0, 3)
        with pytest.raises(DomainError):
            mask_of([-1])


class TestProject:
    def test_single_empty_concept(self):
        assert project(ConceptClass(3, (0,)), [0, 1]) == {fs()}

    def test_powerset_restricts_to_powerset(self):
        got = project(ConceptClass.powerset(3), [0, 1])
        assert got == {fs(), fs(0), fs(1), fs(0, 1)}

    def test_co_singletons(self):
        got = project(ConceptClass.co_singletons(4), [0, 1])
        assert got == {fs(1), fs(0), fs(0, 1)}

    def test_out_of_domain(self):
        with pytest.raises(DomainError):
            project(ConceptClass.powerset(2), [2])

    @given(classes(), st.data())
    def test_size_bound(self, C, data):
        B = data.draw(st.sets(st.integers(0, C.n - 1)))
        assert len(project(C, B)) <= min(len(C), 2 ** len(B))


class TestVCDimension:
    def test_powerset(self):
        assert vc_dimension(ConceptClass.powerset(5)) == 5

    def test_co_singletons(self):
        assert vc_dimension(ConceptClass.co_singletons(4)) == 1

    def test_empty_and_full(self):
        assert vc_dimension(ConceptClass(4, (0, 15))) == 1

    def test_empty_class(self):
        with pytest.raises(ValueError):
            vc_dimension(ConceptClass(3, ()))

    @given(classes())
    @settings(max_examples=60)
    def test_matches_oracle(self, C):
        assert vc_dimension(C) == oracles.vcd(C.sets(), C.n)

    @given(classes(), st.integers(0, 63))
    def test_monotone_under_adding_concepts(self, C, extra):
        bigger = ConceptClass(C.n, C.concepts + (extra % (1 << C.n),))
        assert vc_dimension(bigger) >= vc_dimension(C)


class TestClawNumber:
    def test_single_empty_concept(self):
        assert claw_number_certified(ConceptClass(4, (0,)), 4) == 0

    def test_co_singletons(self):
        assert claw_number_certified(ConceptClass.co_singletons(6), 6) == 1

    def test_powerset(self):
        assert claw_number_certified(ConceptClass.powerset(5), 5) == 5

    def test_certificate_records_level(self):
        cert = claw_certificate(ConceptClass.co_singletons(6), 4)
        assert (cert.value, cert.max_level) == (1, 4)

    @pytest.mark.parametrize("M", [0, 5])
    def test_level_outside_domain(self, M):
        with pytest.raises(DomainError):
            claw_number_certified(ConceptClass.powerset(4), M)

    @pytest.mark.parametrize("n,h", [(5, 1), (5, 2), (6, 3)])
    def test_co_size_classes(self, n, h):
        # Only sizes up to n are available, so the certificate tops out where
        # the co-size-h sets of the whole domain are the class itself.
        C = ConceptClass.co_size(n, h)
        assert claw_number_certified(C, n) == oracles.claw(C.sets(), n, n)

    @given(classes(max_n=5), st.data())
    @settings(max_examples=60)
    def test_matches_oracle(self, C, data):
        M = data.draw(st.integers(1, C.n))
        assert claw_number_certified(C, M) == oracles.claw(C.sets(), C.n, M)

    @given(classes())
    @settings(max_examples=60)
    def test_bounded_by_vcd_when_room(self, C):
        h = claw_number_certified(C, C.n)
        if C.n >= 2 * h:
            assert h <= vc_dimension(C)


class TestSymmetricDifference:
    def test_single(self):
        assert symmetric_difference_class(ConceptClass(3, (5,))).concepts == (0,)

    def test_two_singletons(self):
        got = symmetric_difference_class(ConceptClass.from_sets(2, [[0], [1]]))
        assert set(got.sets()) == {fs(), fs(0, 1)}

    @given(classes())
    @settings(max_examples=60)
    def test_vcd_bound(self, C):
        D = symmetric_difference_class(C)
        assert 0 in D.concepts
        assert vc_dimension(D) <= 2 * vc_dimension(C) + 1


class TestIntersectionClosure:
    def test_idempotent_singleton(self):
        C = ConceptClass(3, (6,))
        assert intersection_closure(C) == C

    def test_one_new_intersection(self):
        got = intersection_closure(ConceptClass.from_sets(3, [[0, 1], [1, 2]]))
        assert set(got.sets()) == {fs(0, 1), fs(1, 2), fs(1)}

    def test_co_singletons_give_everything_but_full(self):
        got = intersection_closure(ConceptClass.co_singletons(4))
        assert set(got.concepts) == set(range(15))

    @given(classes(max_n=5))
    @settings(max_examples=40)
    def test_matches_oracle(self, C):
        assert set(intersection_closure(C).sets()) == oracles.closure(C.sets())

    @pytest.mark.parametrize("n", range(3, 9))
    def test_claw_gives_large_closure_dimension(self, n):
        C = ConceptClass.co_singletons(n)
        assert claw_number_certified(C, n) >= 1
        assert vc_dimension(intersection_closure(C)) >= n - 1


def test_random_classes_agree_with_oracle(rng):
    for _ in range(25):
        C = random_class(rng, max_n=7)
        assert vc_dimension(C) == oracles.vcd(C.sets(), C.n)
        for B in combinations(range(C.n), min(2, C.n)):
            assert project(C, B) == oracles.restrictions(C.sets(), B)
