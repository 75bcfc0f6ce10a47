import itertools
import json
from fractions import Fraction

import pytest
from hypothesis import given, settings, strategies as st

from cxcdyn.dynsys import (
    CellAddress,
    SystemError,
    arc_contains_point,
    arcs_overlap,
    circle_substitution_system,
    circle_system,
    enumerate_level,
    fullshift_system,
    intersects,
    load_system,
    make_arc,
    preimage_components,
)
from cxcdyn.dynsys.circle import overlap_components
from cxcdyn.dynsys.types import BudgetError


def rationals(max_den=64):
    return st.fractions(min_value=0, max_value=3, max_denominator=max_den)


class TestArcs:
    def test_canonicalization(self):
        a = make_arc(Fraction(-1, 16), Fraction(5, 16))
        assert a.as_fractions() == (Fraction(15, 16), Fraction(21, 16))

    def test_bad_lengths(self):
        with pytest.raises(SystemError):
            make_arc(Fraction(0), Fraction(3, 2))
        with pytest.raises(SystemError):
            make_arc(Fraction(1, 2), Fraction(1, 2))

    def test_spec_example_overlap(self):
        assert arcs_overlap(make_arc(Fraction(0), Fraction(5, 16)),
                            make_arc(Fraction(1, 4), Fraction(9, 16)))

    def test_wraparound_overlap(self):
        a = make_arc(Fraction(0), Fraction(5, 16))
        b = make_arc(Fraction(3, 4), Fraction(11, 8))  # spills past 1
        assert arcs_overlap(a, b)
        assert arcs_overlap(b, a)

    @given(lo1=rationals(), len1=rationals(), lo2=rationals(), len2=rationals())
    @settings(max_examples=200, deadline=None)
    def test_overlap_matches_pointwise(self, lo1, len1, lo2, len2):
        if not (0 < len1 < 1 and 0 < len2 < 1):
            return
        a = make_arc(lo1, lo1 + len1)
        b = make_arc(lo2, lo2 + len2)
        assert arcs_overlap(a, b) == arcs_overlap(b, a)
        comps = overlap_components(a, b)
        assert bool(comps) == arcs_overlap(a, b)
        for lo, hi in comps:
            mid = (lo + hi) / 2
            assert arc_contains_point(a, mid) and arc_contains_point(b, mid)

    @given(lo=rationals(), length=rationals(), x=rationals())
    @settings(max_examples=200, deadline=None)
    def test_point_membership_shift_invariant(self, lo, length, x):
        if not 0 < length < 1:
            return
        a = make_arc(lo, lo + length)
        assert arc_contains_point(a, x) == arc_contains_point(a, x + 1)


class TestCircleSystem:
    def test_builtin_shape(self, circle_spec):
        assert circle_spec.degree == 2
        assert len(circle_spec.elements) == 4
        assert len(enumerate_level(circle_spec, 1)) == 4
        assert len(enumerate_level(circle_spec, 3)) == 16

    def test_preimage_arcs_reproject(self, circle_spec):
        # children of (a, b) are ((a+j)/d, (b+j)/d); mapping forward returns the arc
        cb = circle_spec.backend
        d = circle_spec.degree
        for addr in enumerate_level(circle_spec, 2):
            lo, hi = cb.arc_of(addr).as_fractions()
            plo, phi = cb.arc_of(addr.parent()).as_fractions()
            assert (lo * d - plo) % 1 == 0
            assert (hi - lo) * d == phi - plo

    def test_preimage_components_sum(self, circle_spec):
        comps = preimage_components(circle_spec, CellAddress("A0"))
        assert [c for _, c in comps] == [1, 1]

    def test_intersects_is_symmetric_reflexive(self, circle_spec):
        lvl = enumerate_level(circle_spec, 2)
        for a in lvl:
            assert intersects(circle_spec, a, a)
        for a, b in itertools.combinations(lvl, 2):
            assert intersects(circle_spec, a, b) == intersects(circle_spec, b, a)

    def test_level_gap_guard(self, circle_spec):
        with pytest.raises(SystemError):
            intersects(circle_spec, CellAddress("A0"),
                       CellAddress("A0", (0, 0)))

    def test_budget(self, circle_spec):
        with pytest.raises(BudgetError):
            enumerate_level(circle_spec, 30, budget=10_000)

    def test_uncovered_circle_rejected(self):
        with pytest.raises(SystemError, match="cover"):
            load_system({
                "degree": 2,
                "backend": "geometric-circle",
                "elements": [{"id": "A", "arc": ["0", "1/4"]},
                             {"id": "B", "arc": ["1/2", "3/4"]}],
                "rules": {"A": [{"index": 0, "degree": 1}, {"index": 1, "degree": 1}],
                          "B": [{"index": 0, "degree": 1}, {"index": 1, "degree": 1}]},
            })


class TestFullShift:
    def test_counts(self, shift_spec):
        assert [len(enumerate_level(shift_spec, n)) for n in (1, 2, 3, 4)] == \
            [2, 4, 8, 16]

    def test_prefix_edges(self, shift_spec):
        # cylinder 0 meets 01 but not 11 (cylinder words read root-last)
        assert intersects(shift_spec, CellAddress("C0"), CellAddress("C1", (0,)))
        assert not intersects(shift_spec, CellAddress("C0"), CellAddress("C1", (1,)))

    def test_same_level_disjoint(self, shift_spec):
        lvl = enumerate_level(shift_spec, 3)
        for a, b in itertools.combinations(lvl, 2):
            assert not intersects(shift_spec, a, b)

    def test_shift_drops_last_address_letter(self, shift_spec):
        addr = CellAddress("C1", (1, 0))  # cylinder 011
        assert addr.parent() == CellAddress("C1", (1,))  # cylinder 11


class TestLoader:
    def test_degree_sum_mismatch(self):
        with pytest.raises(SystemError, match="sum"):
            load_system({
                "degree": 6,
                "backend": "substitution",
                "elements": [{"id": "A"}],
                "rules": {"A": [{"index": 0, "degree": 5}]},
            })

    def test_builtin_descriptors(self):
        assert load_system("builtin:circle:d=2,arcs=4").degree == 2
        assert load_system("fullshift:d=3").degree == 3
        with pytest.raises(SystemError):
            load_system("builtin:nonsense")

    def test_json_roundtrip_circle(self, tmp_path):
        f = tmp_path / "sys.json"
        f.write_text(json.dumps({
            "degree": 2,
            "backend": "geometric-circle",
            "elements": [{"id": "A", "arc": ["-1/8", "5/8"]},
                         {"id": "B", "arc": ["3/8", "9/8"]}],
            "rules": {"A": [{"index": 0, "degree": 1}, {"index": 1, "degree": 1}],
                      "B": [{"index": 0, "degree": 1}, {"index": 1, "degree": 1}]},
        }))
        spec = load_system(f)
        assert len(enumerate_level(spec, 2)) == 4


class TestBackendCrossValidation:
    def test_circle_substitution_agrees_to_level_5(self):
        geo = circle_system(2, 4)
        sub = circle_substitution_system(2, 4)
        for n in range(1, 6):
            a_lvl = enumerate_level(geo, n)
            assert a_lvl == enumerate_level(sub, n)
            for a, b in itertools.combinations(a_lvl, 2):
                assert intersects(geo, a, b) == intersects(sub, a, b), (a, b)
            if n < 5:
                nxt = enumerate_level(geo, n + 1)
                for a in a_lvl:
                    for b in nxt:
                        assert intersects(geo, a, b) == intersects(sub, a, b), (a, b)

    @pytest.mark.parametrize("d,arcs", [(2, 2), (3, 4), (2, 5)])
    def test_other_circle_shapes(self, d, arcs):
        geo = circle_system(d, arcs)
        sub = circle_substitution_system(d, arcs)
        for n in (1, 2, 3):
            lvl = enumerate_level(geo, n)
            for a, b in itertools.combinations(lvl, 2):
                assert intersects(geo, a, b) == intersects(sub, a, b)
