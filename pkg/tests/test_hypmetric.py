import itertools
import math
import random
from fractions import Fraction

import pytest

from cxcdyn.dynsys import CellAddress
from cxcdyn.gamma import build_graph
from cxcdyn.hypmetric import (
    BoundaryAddress,
    MetricParams,
    address_of,
    ball_image_check,
    boundary_distance,
    dijkstra,
    dist_eps,
    dist_to_boundary,
    edge_weight,
    gromov_product,
    gromov_product2,
    horizontal_weight,
    hyperbolicity_delta,
    shadow,
    shadow_diameter,
    shadow_equivariance_violations,
    vertex_norm,
    vertical_weight,
)


def test_edge_weight_closed_forms():
    # vertical at level 0 with eps = 1 integrates e^{-t} over one level
    assert abs(vertical_weight(0, 1.0) - (1 - math.exp(-1))) < 1e-15
    # horizontal edges are two half-edges
    assert abs(horizontal_weight(3, 0.5)
               - 2 * math.exp(-1.5) * (1 - math.exp(-0.25)) / 0.5) < 1e-15
    # unit-weight limit as eps -> 0
    assert abs(vertical_weight(0, 1e-9) - 1.0) < 1e-6
    assert abs(horizontal_weight(0, 1e-9) - 1.0) < 1e-6


def test_metric_axioms_random_triples(circle6, params):
    rng = random.Random(11)
    n = len(circle6.vertices)
    dists = {}
    for _ in range(15):
        u, v, w = (rng.randrange(n) for _ in range(3))
        for s in (u, v, w):
            if s not in dists:
                dists[s] = dijkstra(circle6, params, s)
        assert dists[u][v] == pytest.approx(dists[v][u], abs=1e-12)
        assert dists[u][w] <= dists[u][v] + dists[v][w] + 1e-12
    assert dist_eps(circle6, params, 1, 1) == 0.0


def test_norm_identity_all_vertices(circle8):
    p = MetricParams(0.25, 8)
    d0 = dijkstra(circle8, p, circle8.o)
    for v in circle8.vertices:
        assert abs(d0[v.index] - vertex_norm(v.level, p.epsilon)) < 1e-12


def test_dist_eps_at_most_unit_distance(circle6, params):
    rng = random.Random(5)
    bfs = {}
    for _ in range(30):
        u = rng.randrange(len(circle6.vertices))
        v = rng.randrange(len(circle6.vertices))
        if u not in bfs:
            bfs[u] = circle6.bfs_distances(u)
        assert dist_eps(circle6, params, u, v) <= bfs[u][v] + 1e-12


def test_dist_eps_against_path_enumeration(circle6, params):
    """Brute force over short simple paths must reproduce Dijkstra."""
    g = circle6
    u = g.spheres[4][0]
    v = g.spheres[4][3]
    target = dist_eps(g, p := params, u, v)

    best = [math.inf]

    def explore(node, seen, acc):
        if acc >= best[0] - 1e-15:
            return
        if node == v:
            best[0] = min(best[0], acc)
            return
        if len(seen) > 12:
            return
        for w in g.adjacency[node]:
            if w not in seen:
                explore(w, seen | {w}, acc + edge_weight(g, p, node, w))

    explore(u, {u}, 0.0)
    assert target == pytest.approx(best[0], abs=1e-12)


def test_gromov_products(circle6, shift6, params):
    # (o|v) = 0 and (v|v) = |v|
    for g in (circle6, shift6):
        v = g.spheres[3][0]
        assert gromov_product(g, params, g.o, v) == 0.0
        assert gromov_product(g, params, v, v) == g.level(v)
    # tree: product = level of the deepest common ancestor (prefix depth)
    a = shift6.index_of[CellAddress("C0", (0, 1))]
    b = shift6.index_of[CellAddress("C1", (0, 1))]
    # cylinders 100 and 101 share the prefix 10
    assert gromov_product(shift6, params, a, b) == 2.0


def test_gromov_product_vs_independent_bfs(circle6, params):
    rng = random.Random(3)
    for _ in range(20):
        u = rng.randrange(len(circle6.vertices))
        v = rng.randrange(len(circle6.vertices))
        d = circle6.bfs_distances(u)[v]
        assert gromov_product2(circle6, u, v) == \
            circle6.level(u) + circle6.level(v) - d


def test_tree_hyperbolicity_zero(shift6, params):
    assert hyperbolicity_delta(shift6, params) == 0.0


def test_sampled_mode_reproducible(circle6, params):
    a = hyperbolicity_delta(circle6, params, mode="sampled", seed=42, count=4000)
    b = hyperbolicity_delta(circle6, params, mode="sampled", seed=42, count=4000)
    assert a == b
    assert a <= hyperbolicity_delta(circle6, params)


def test_exhaustive_cap(circle8):
    with pytest.raises(Exception):
        hyperbolicity_delta(circle8, MetricParams(0.25, 8), cap=10)


def cyl(g, letters):
    """Graph vertex of the cylinder with the given symbol sequence."""
    root = f"C{letters[-1]}"
    return g.index_of[CellAddress(root, tuple(reversed(letters[:-1])))]


class TestShadows:
    def test_tree_shadow_members(self, shift6):
        # ball of [00] holds [0]; the shadow is every cylinder starting with 0
        w = cyl(shift6, [0, 0])
        sh = shadow(shift6, w)
        for n in range(2, 7):
            members = sh.at_level(n)
            assert len(members) == 2 ** (n - 1)
            for i in members:
                word = shift6.vertex(i).address.word
                first_letter = word[-1]
                assert first_letter == 0

    def test_shadow_of_first_sphere_is_everything(self, shift6):
        # the radius-1 ball around a level-1 vertex contains o, whose
        # descending chains reach every vertex
        sh = shadow(shift6, shift6.spheres[1][0])
        assert sh.at_level(6) == set(shift6.spheres[6])

    def test_shadow_contains_base(self, circle6):
        w = circle6.spheres[3][5]
        assert w in shadow(circle6, w).at_level(3)

    def test_diameter_bound(self, circle6, params):
        # diam(shadow(W)) * e^{eps |W|} bounded over levels 2..5
        vals = []
        for n in range(2, 6):
            w = circle6.spheres[n][0]
            sh = shadow(circle6, w)
            vals.append(shadow_diameter(circle6, params, sh)
                        * math.exp(params.epsilon * n))
        assert max(vals) < 12.0
        assert max(vals) / min(vals) < 3.0

    def test_F_maps_shadows_onto_shadows(self, circle6):
        for n in (2, 3, 4):
            xi = circle6.spheres[n][1]
            assert shadow_equivariance_violations(circle6, xi) == []


def test_ball_image_law_interior(circle6):
    p = MetricParams(0.25, 6)
    for xi in (circle6.spheres[3][0], circle6.spheres[4][7]):
        rep = ball_image_check(circle6, p, xi)
        assert rep["violations"] == []
        assert len(rep["radii"]) == 10


def test_ball_image_tiny_radius(circle6):
    p = MetricParams(0.25, 6)
    xi = circle6.spheres[3][0]
    rep = ball_image_check(circle6, p, xi, radii=[1e-9])
    assert rep["violations"] == []


class TestBoundary:
    def test_address_of_basics(self, circle_spec, circle6, params):
        ba = address_of(circle_spec, circle6, Fraction(0))
        assert len(ba.chain) == 6
        cb = circle_spec.backend
        for n, v in enumerate(ba.chain, start=1):
            from cxcdyn.dynsys.circle import arc_contains_point

            assert arc_contains_point(cb.arc_of(circle6.vertex(v).address),
                                      Fraction(0))

    def test_periodic_point_address_pattern(self, circle_spec, circle6):
        # 1/3 -> 2/3 -> 1/3: containing arcs repeat with period 2 in structure
        ba = address_of(circle_spec, circle6, Fraction(1, 3))
        words = [circle6.vertex(v).address for v in ba.chain]
        tails = [w.word[-1] for w in words if w.word]
        assert tails == [t for t in itertools_cycle_check(tails)]

    def test_two_addresses_stay_close(self, circle_spec, circle6):
        cb = circle_spec.backend
        point = Fraction(1, 4)  # lies in two arcs at several levels
        for n in range(1, 7):
            hits = [circle6.index_of[a] for a in cb.containing_addresses(point, n)]
            for u, v in itertools.combinations(hits, 2):
                assert v in circle6.adjacency[u]

    def test_boundary_distance_same_address(self, circle_spec, circle6, params):
        ba = address_of(circle_spec, circle6, Fraction(0))
        est, err = boundary_distance(circle6, params, ba, ba)
        assert est == 0.0
        assert err == pytest.approx(4 * math.exp(-params.epsilon * 6)
                                    / params.epsilon)

    def test_tree_split_estimate(self, shift6, params):
        # rays along 000000 and 001000 split at level 2: the boundary
        # estimate is the cost of descending both tails from the split
        def chain(letters):
            return [shift6.vertex(cyl(shift6, letters[:n])).address
                    for n in range(1, len(letters) + 1)]

        a = BoundaryAddress.from_addresses(shift6, chain([0] * 6))
        b = BoundaryAddress.from_addresses(shift6, chain([0, 0, 1, 0, 0, 0]))
        est, err = boundary_distance(shift6, params, a, b)
        eps = params.epsilon
        expected = 2 * (math.exp(-eps * 2) - math.exp(-eps * 6)) / eps
        assert est == pytest.approx(expected, rel=1e-9)

    def test_estimates_tighten_with_depth(self, circle_spec, params):
        g1 = build_graph(circle_spec, 4)
        g2 = build_graph(circle_spec, 6)
        x, y = Fraction(1, 7), Fraction(2, 7)
        e1, err1 = boundary_distance(g1, MetricParams(0.25, 4),
                                     address_of(circle_spec, g1, x),
                                     address_of(circle_spec, g1, y))
        e2, _ = boundary_distance(g2, MetricParams(0.25, 6),
                                  address_of(circle_spec, g2, x),
                                  address_of(circle_spec, g2, y))
        assert abs(e2 - e1) <= err1

    def test_dist_to_boundary_enclosure(self, shift6, circle6, params):
        # on a tree every vertex lies on a ray: upper == lower
        v = shift6.spheres[3][0]
        lo, hi = dist_to_boundary(shift6, params, v)
        assert lo == pytest.approx(hi, abs=1e-12)
        v = circle6.spheres[3][0]
        lo, hi = dist_to_boundary(circle6, params, v)
        assert lo <= hi + 1e-12
        assert lo == pytest.approx(
            math.exp(-params.epsilon * 3) / params.epsilon)

    def test_deepest_vertex_upper_is_tail(self, circle6, params):
        v = circle6.spheres[6][0]
        lo, hi = dist_to_boundary(circle6, params, v)
        assert hi == pytest.approx(math.exp(-params.epsilon * 6) / params.epsilon)


def itertools_cycle_check(tails):
    """The tail letters of the 1/3 address settle into a 2-periodic pattern."""
    if len(tails) >= 4:
        assert tails[-1] == tails[-3] and tails[-2] == tails[-4]
    return tails


def test_F_lipschitz_on_edges(circle6, params):
    # d_eps(F u, F v) <= e^eps d_eps(u, v) on all edges away from o
    eps = params.epsilon
    for u, v in circle6.edges():
        if circle6.level(u) < 2 or circle6.level(v) < 2:
            continue
        fu, fv = circle6.F[u], circle6.F[v]
        if fu == fv:
            continue
        w_edge = edge_weight(circle6, params, u, v)
        w_img = edge_weight(circle6, params, fu, fv)
        assert w_img <= math.exp(eps) * w_edge + 1e-12
