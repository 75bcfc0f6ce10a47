import math
from fractions import Fraction

import pytest

from cxcdyn.dynsys import CellAddress
from cxcdyn.dynsys.types import SystemError
from cxcdyn.gamma import build_graph
from cxcdyn.hypmetric import MetricParams, shadow
from cxcdyn.measure import (
    AtomicMeasure,
    degree_identity_holds,
    entropy_report,
    mu_f_proxy,
    mu_s,
    periodic_measure,
    periodic_point_shadow_mass,
    poincare_partial_sum,
    poincare_series,
    preimage_measure,
    push_forward,
    shadow_lemma_ratios,
)


class TestPoincare:
    def test_closed_form_spec_example(self, circle6):
        # d=2, |S(1)|=... the closed form at s = log 2 + 1 is |S1|/(2e-2)
        s = math.log(2) + 1
        val = poincare_series(circle6, s)
        assert val == pytest.approx(4 / (2 * math.e - 2), rel=1e-12)

    def test_truncation_agrees(self, circle6):
        for off in (0.1, 0.5, 1.0):
            s = math.log(2) + off
            closed = poincare_series(circle6, s)
            partial = poincare_partial_sum(2, 4, s, 200)
            assert closed == pytest.approx(partial, rel=1e-10)

    def test_decays_to_zero(self, circle6):
        assert poincare_series(circle6, 30.0) < 1e-10

    def test_divergence_guard(self, circle6):
        with pytest.raises(SystemError):
            poincare_series(circle6, math.log(2))


class TestMuS:
    def test_mass_with_tail(self, circle8):
        for off in (0.1, 0.5, 1.0):
            m, tail = mu_s(circle8, math.log(2) + off)
            assert abs(float(m.total_mass()) + tail - 1.0) < 1e-12

    def test_atom_formula(self, shift6):
        s = math.log(2) + 0.5
        m, _ = mu_s(shift6, s)
        P = poincare_series(shift6, s)
        v = shift6.spheres[1][0]
        assert m.atoms[v] == pytest.approx(math.exp(-s) / P, rel=1e-12)

    def test_mass_shifts_deep_as_s_drops(self, circle8):
        shares = []
        for off in (1.0, 0.5, 0.1):
            m, tail = mu_s(circle8, math.log(2) + off)
            deep = sum(m.atoms[i] for i in circle8.spheres[8])
            shares.append(deep + tail)
        assert shares[0] < shares[1] < shares[2]


class TestProxy:
    def test_exact_probability(self, circle8, bary4):
        for g in (circle8, bary4):
            m = mu_f_proxy(g)
            assert m.total_mass() == 1
            assert all(isinstance(v, Fraction) for v in m.atoms.values())

    def test_pushforward_recovers_slices(self, bary4):
        for n in range(2, bary4.depth + 1):
            assert push_forward(bary4, mu_f_proxy(bary4, n)).atoms == \
                mu_f_proxy(bary4, n - 1).atoms

    def test_pullback_multiplies_by_degree(self, bary4):
        # mass of a vertex equals (1/d) sum of child masses times d: the
        # fiber rule makes child masses sum to parent mass
        proxy_hi = mu_f_proxy(bary4, 4)
        proxy_lo = mu_f_proxy(bary4, 3)
        from cxcdyn.gamma import preimages_of

        for v, mass in proxy_lo.atoms.items():
            kids = preimages_of(bary4, v)
            assert sum(proxy_hi.atoms[w] for w, _ in kids) == mass

    def test_uniform_on_shift(self, shift6):
        m = mu_f_proxy(shift6, 4)
        assert set(m.atoms.values()) == {Fraction(1, 16)}

    def test_branch_vertex_inflation(self, bary4):
        m = mu_f_proxy(bary4, 4)
        degs = {v: bary4.vertex(v).degree for v in bary4.spheres[4]}
        top = max(degs.values())
        heavy = [v for v, d in degs.items() if d == top]
        base = Fraction(1, 6 ** 3 * 12)
        for v in heavy:
            assert m.atoms[v] == base * top


class TestPreimageMeasure:
    def test_shift_uniform(self, shift6):
        xi = shift6.spheres[1][0]
        m = preimage_measure(shift6, xi, 2)
        assert len(m.atoms) == 4
        assert set(m.atoms.values()) == {Fraction(1, 4)}

    def test_mass_one_despite_branching(self, bary4):
        xi = bary4.spheres[1][0]
        for n in (1, 2, 3):
            assert preimage_measure(bary4, xi, n).total_mass() == 1

    def test_depth_guard(self, circle6):
        with pytest.raises(ValueError):
            preimage_measure(circle6, circle6.spheres[1][0], 6)


class TestPeriodic:
    def test_circle_period_3(self, circle8):
        m = periodic_measure(circle8, 3)
        assert len(m.atoms) <= 7  # 7 points, possibly sharing atoms
        assert m.total_mass() == Fraction(7, 8)

    def test_shift_period_2(self, shift6):
        m = periodic_measure(shift6, 2)
        assert m.total_mass() == 1

    def test_fsr_unsupported(self, bary4):
        with pytest.raises(SystemError):
            periodic_measure(bary4, 2)

    def test_shadow_mass_vs_proxy(self, circle8):
        p = MetricParams(0.25, 8)
        proxy = mu_f_proxy(circle8)
        for w in circle8.spheres[3][:4]:
            sh = shadow(circle8, w)
            a = periodic_point_shadow_mass(circle8, 8, sh)
            b = proxy.mass_on(sh.at_level(8))
            assert abs(float(a - b)) < 0.05


class TestShadowLemma:
    def test_ratios_constant_on_shift(self, shift6):
        p = MetricParams(0.25, 6)
        rep = shadow_lemma_ratios(shift6, p, min_level=2, max_level=4)
        by_level = {}
        for row in rep["rows"]:
            by_level.setdefault(row["level"], set()).add(round(row["ratio"], 12))
        for level, vals in by_level.items():
            assert len(vals) == 1

    def test_alpha_formula(self, circle8):
        p = MetricParams(0.25, 8)
        rep = shadow_lemma_ratios(circle8, p, min_level=2, max_level=3)
        assert rep["alpha"] == pytest.approx(math.log(2) / 0.25)

    def test_window_on_circle(self, circle8):
        p = MetricParams(0.25, 8)
        rep = shadow_lemma_ratios(circle8, p)
        assert rep["min_ratio"] > 0.1
        assert rep["max_ratio"] < 10.0


class TestEntropy:
    def test_exact_growth_on_shift(self, shift6):
        p = MetricParams(0.25, 6)
        er = entropy_report(shift6, p)
        assert er.v_estimate == pytest.approx(math.log(2), abs=1e-12)
        assert er.lower_bound == pytest.approx(math.log(2), abs=1e-12)

    def test_chain_and_alpha(self, circle8, bary4):
        for g, eps in ((circle8, 0.25), (bary4, 0.25)):
            if g.depth < 5:
                continue
            er = entropy_report(g, MetricParams(eps, g.depth))
            d = g.spec.degree
            assert er.lower_bound <= er.v_estimate + 1e-9
            assert er.v_estimate <= math.log(d) + 1e-9
            assert er.lower_bound >= 0.0
            assert er.alpha == pytest.approx(math.log(d) / eps)
            assert er.dimension_bounds[0] == pytest.approx(er.lower_bound / eps)

    def test_branching_lowers_the_bound(self, bary_spec):
        g = build_graph(bary_spec, 5)
        er = entropy_report(g, MetricParams(0.25, 5))
        assert er.lower_bound < math.log(6) - 1e-6


def test_degree_identity_helper(circle8, bary4):
    assert degree_identity_holds(circle8)
    assert degree_identity_holds(bary4)


def test_atomic_measure_utilities():
    m = AtomicMeasure({1: Fraction(1, 3), 2: Fraction(2, 3)})
    assert m.is_probability()
    assert m.mass_on({1}) == Fraction(1, 3)
    assert m.restrict({2}).atoms == {2: Fraction(2, 3)}
