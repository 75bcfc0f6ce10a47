import json

import pytest

from cxcdyn.dynsys import CellAddress, circle_system
from cxcdyn.dynsys.types import BudgetError
from cxcdyn.gamma import (
    build_graph,
    export_graph,
    F_of,
    preimages_of,
    sphere_degree_sum,
    sphere_size,
)


def test_sphere_property_exhaustive(circle6, shift6, bary4):
    for g in (circle6, shift6, bary4):
        dist = g.bfs_distances(g.o)
        assert all(dist[v.index] == v.level for v in g.vertices)


def test_edge_level_gap_and_simplicity(circle6, bary4):
    for g in (circle6, bary4):
        for u, v in g.edges():
            assert abs(g.level(u) - g.level(v)) <= 1
            assert u != v
        for u in range(len(g.vertices)):
            assert len(set(g.adjacency[u])) == len(g.adjacency[u])


def test_base_point_joins_whole_first_sphere(circle6):
    assert set(circle6.neighbors(circle6.o)) == set(circle6.spheres[1])


def test_F_decreases_levels(circle6):
    for v in circle6.vertices[1:]:
        img = F_of(circle6, v.index)
        assert circle6.level(img) == max(v.level - 1, 0)


def test_F_is_a_graph_map_away_from_base(circle6, bary4):
    # adjacent vertices at levels >= 1 map to equal or adjacent vertices
    for g in (circle6, bary4):
        for u, v in g.edges():
            if g.level(u) < 1 or g.level(v) < 1:
                continue
            fu, fv = g.F[u], g.F[v]
            if fu != fv and g.level(fu) >= 1 and g.level(fv) >= 1:
                assert fv in g.adjacency[fu], (g.vertex(u), g.vertex(v))


def test_fiber_degree_sums(circle6, shift6, bary4):
    for g in (circle6, shift6, bary4):
        d = g.spec.degree
        for n in range(1, g.depth):
            for i in g.spheres[n]:
                assert sum(m for _, m in preimages_of(g, i)) == d


def test_degree_identity_exact(circle6, bary4, pillow4):
    for g in (circle6, bary4, pillow4):
        d, s1 = g.spec.degree, len(g.spheres[1])
        for n in range(g.depth):
            assert sphere_degree_sum(g, n + 1) == d ** n * s1


def test_vertex_degree_recursion(bary4):
    # d(W) = d(F(W)) * d_F(W)
    for v in bary4.vertices:
        if v.level >= 2:
            parent = bary4.vertex(bary4.F[v.index])
            assert v.degree == parent.degree * v.last_degree


def test_level_one_degrees_are_one(bary4):
    assert all(bary4.vertex(i).degree == 1 for i in bary4.spheres[1])


def test_sphere_sizes(circle6, shift6):
    assert [sphere_size(circle6, n) for n in range(7)] == \
        [1, 4, 8, 16, 32, 64, 128]
    assert [sphere_size(shift6, n) for n in range(7)] == \
        [1, 2, 4, 8, 16, 32, 64]
    with pytest.raises(ValueError):
        sphere_size(circle6, 7)


def test_sphere_growth_bound(circle6, bary4):
    # each level-(n+1) element is one of at most d components over its image
    for g in (circle6, bary4):
        d = g.spec.degree
        for n in range(1, g.depth):
            assert sphere_size(g, n + 1) <= d * sphere_size(g, n)


def test_shift_graph_is_tree(shift6):
    edges = sum(len(a) for a in shift6.adjacency) // 2
    assert edges == len(shift6.vertices) - 1
    for n in range(1, shift6.depth + 1):
        for i in shift6.spheres[n]:
            assert not any(shift6.level(j) == n for j in shift6.neighbors(i))


def test_circle_rings(circle6):
    for n in range(1, circle6.depth + 1):
        for i in circle6.spheres[n]:
            same = [j for j in circle6.neighbors(i) if circle6.level(j) == n]
            assert len(same) == 2


def test_budget_guard():
    with pytest.raises(BudgetError):
        build_graph(circle_system(2, 4), 12, budget_vertices=1000)


def test_preimages_depth_guard(circle6):
    deepest = circle6.spheres[circle6.depth][0]
    with pytest.raises(ValueError):
        preimages_of(circle6, deepest)


def test_deterministic_rebuild(circle_spec):
    g1 = build_graph(circle_spec, 4)
    g2 = build_graph(circle_spec, 4)
    assert [v.address for v in g1.vertices] == [v.address for v in g2.vertices]
    assert g1.adjacency == g2.adjacency
    assert g1.F == g2.F


def test_export_roundtrip(shift6):
    data = export_graph(shift6, "json")
    assert data["schema"] == "v1"
    assert len(data["vertices"]) == len(shift6.vertices)
    csv_text = export_graph(shift6, "csv")
    assert csv_text.splitlines()[0] == "id,label,level,d,dF,neighbors,F"
    assert len(csv_text.splitlines()) == len(shift6.vertices) + 1
