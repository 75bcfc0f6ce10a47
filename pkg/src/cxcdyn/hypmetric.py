"""Visual-metric layer: conformal edge weights, weighted distances, Gromov
products, hyperbolicity constants, shadows and boundary estimates.

The metric rescales each edge by exp(-eps * |x|) along it, so a vertical
edge from level n to n+1 weighs e^{-eps n}(1-e^{-eps})/eps and a horizontal
edge at level n weighs 2 e^{-eps n}(1-e^{-eps/2})/eps (the graph distance to
the base point along such an edge is n + min(t, 1-t)).
"""

from __future__ import annotations

import heapq
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynsys.types import CellAddress, SystemError, SystemSpec
from .gamma import GammaGraph


@dataclass(frozen=True)
class MetricParams:
    epsilon: float = 0.25
    depth: int = 6

    def __post_init__(self):
        if not 0 < self.epsilon <= 1:
            raise ValueError("epsilon must lie in (0, 1]")


@dataclass
class BoundaryAddress:
    """A descending chain W_1, W_2, ... with consecutive vertices adjacent."""

    chain: list[int]

    @staticmethod
    def from_addresses(g: GammaGraph, addrs: list[CellAddress]) -> "BoundaryAddress":
        chain = [g.index_of[a] for a in addrs]
        ba = BoundaryAddress(chain)
        ba.validate(g)
        return ba

    def validate(self, g: GammaGraph) -> None:
        for n, v in enumerate(self.chain, start=1):
            if g.level(v) != n:
                raise ValueError(f"chain entry {n} has level {g.level(v)}")
        for u, v in zip(self.chain, self.chain[1:]):
            if v not in g.adjacency[u]:
                raise ValueError(f"chain entries {u},{v} are not adjacent")


@dataclass
class ShadowSet:
    base: int
    radius: int
    members: dict[int, set[int]] = field(default_factory=dict)  # level -> vertices

    def all_members(self) -> set[int]:
        out = set()
        for s in self.members.values():
            out |= s
        return out

    def at_level(self, n: int) -> set[int]:
        return self.members.get(n, set())


def vertical_weight(level: int, eps: float) -> float:
    return math.exp(-eps * level) * (1.0 - math.exp(-eps)) / eps


def horizontal_weight(level: int, eps: float) -> float:
    return 2.0 * math.exp(-eps * level) * (1.0 - math.exp(-eps / 2.0)) / eps


def edge_weight(g: GammaGraph, p: MetricParams, u: int, v: int) -> float:
    lu, lv = g.level(u), g.level(v)
    if lu == lv:
        return horizontal_weight(lu, p.epsilon)
    return vertical_weight(min(lu, lv), p.epsilon)


def vertex_norm(level: int, eps: float) -> float:
    """|W|_eps along a geodesic ray: (1 - e^{-eps*level})/eps."""
    return (1.0 - math.exp(-eps * level)) / eps


def dijkstra(g: GammaGraph, p: MetricParams, source: int,
             targets: set[int] | None = None) -> list[float]:
    """Weighted shortest-path distances; ties broken by vertex index."""
    dist = [math.inf] * len(g.vertices)
    dist[source] = 0.0
    heap = [(0.0, source)]
    remaining = set(targets) if targets is not None else None
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        if remaining is not None:
            remaining.discard(u)
            if not remaining:
                break
        for v in g.adjacency[u]:
            nd = d + edge_weight(g, p, u, v)
            if nd < dist[v]:
                dist[v] = nd
                heapq.heappush(heap, (nd, v))
    return dist


def dist_eps(g: GammaGraph, p: MetricParams, u: int, v: int) -> float:
    return dijkstra(g, p, u, {v})[v]


def gromov_product2(g: GammaGraph, u: int, v: int, d0: list[list[int]] | None = None) -> int:
    """Twice the Gromov product at o in the unit metric (an exact integer)."""
    duv = d0[u][v] if d0 is not None else g.bfs_distances(u)[v]
    return g.level(u) + g.level(v) - duv


def gromov_product(g: GammaGraph, p: MetricParams, u: int, v: int) -> float:
    return gromov_product2(g, u, v) / 2.0


def all_pairs_unit(g: GammaGraph) -> np.ndarray:
    n = len(g.vertices)
    out = np.empty((n, n), dtype=np.int32)
    for i in range(n):
        out[i] = g.bfs_distances(i)
    return out


def hyperbolicity_delta(g: GammaGraph, p: MetricParams, mode: str = "exhaustive",
                        seed: int = 0, count: int = 10000, cap: int = 2000) -> float:
    """Largest defect of the basepoint triple inequality for Gromov products.

    Exhaustive over all vertex triples (products via the unit metric), or a
    seeded sample of triples.  Returns delta as an exact half-integer.
    """
    n = len(g.vertices)
    if mode == "exhaustive":
        if n > cap:
            raise SystemError(f"exhaustive mode capped at {cap} vertices, graph has {n}")
        d0 = all_pairs_unit(g)
        lev = np.array([v.level for v in g.vertices], dtype=np.int32)
        G2 = lev[:, None] + lev[None, :] - d0  # twice the Gromov product
        best = np.full((n, n), -(10 ** 9), dtype=np.int32)
        for y in range(n):
            np.maximum(best, np.minimum(G2[:, y][:, None], G2[y, :][None, :]), out=best)
        delta2 = int((best - G2).max())
        return delta2 / 2.0
    if mode == "sampled":
        rng = random.Random(seed)
        dist_cache: dict[int, list[int]] = {}

        def d0(u, v):
            if u not in dist_cache:
                dist_cache[u] = g.bfs_distances(u)
            return dist_cache[u][v]

        def g2(u, v):
            return g.level(u) + g.level(v) - d0(u, v)

        worst = 0
        for _ in range(count):
            x, y, z = (rng.randrange(n) for _ in range(3))
            worst = max(worst, min(g2(x, y), g2(y, z)) - g2(x, z))
        return worst / 2.0
    raise ValueError(f"unknown mode {mode!r}")


def shadow(g: GammaGraph, w: int, radius: int = 1) -> ShadowSet:
    """Strictly-descending-chain closure of the ball B(w, radius)."""
    if w == g.o:
        raise ValueError("shadows are based at vertices other than o")
    ball = {w}
    frontier = {w}
    for _ in range(radius):
        frontier = {v for u in frontier for v in g.adjacency[u]} - ball
        ball |= frontier
    members: dict[int, set[int]] = {}
    reach = set(ball)
    for v in ball:
        members.setdefault(g.level(v), set()).add(v)
    current = ball
    while current:
        nxt = set()
        for u in current:
            lu = g.level(u)
            for v in g.adjacency[u]:
                if g.level(v) == lu + 1 and v not in reach:
                    nxt.add(v)
                    reach.add(v)
        for v in nxt:
            members.setdefault(g.level(v), set()).add(v)
        current = nxt
    return ShadowSet(base=w, radius=radius, members=members)


def shadow_diameter(g: GammaGraph, p: MetricParams, s: ShadowSet) -> float:
    verts = sorted(s.all_members())
    best = 0.0
    for u in verts:
        dist = dijkstra(g, p, u, set(verts))
        best = max(best, max(dist[v] for v in verts))
    return best


def shadow_equivariance_violations(g: GammaGraph, xi: int, radius: int = 1) -> list[int]:
    """Levels at which F(shadow(xi)) and shadow(F(xi)) disagree (truncation-aware)."""
    if g.level(xi) < 2:
        raise ValueError("needs |xi| >= 2")
    sh = shadow(g, xi, radius)
    sh_img = shadow(g, g.F[xi], radius)
    bad = []
    for n in range(g.level(g.F[xi]) - radius, g.depth):  # image levels fully built
        pushed = {g.F[v] for v in sh.at_level(n + 1)}
        if pushed != sh_img.at_level(n):
            bad.append(n)
    return bad


def boundary_distance(g: GammaGraph, p: MetricParams,
                      a: BoundaryAddress, b: BoundaryAddress) -> tuple[float, float]:
    """Estimated boundary distance with an explicit additive error bound."""
    n = min(len(a.chain), len(b.chain))
    est = dist_eps(g, p, a.chain[n - 1], b.chain[n - 1])
    err = 4.0 * math.exp(-p.epsilon * n) / p.epsilon
    return est, err


def address_of(spec: SystemSpec, g: GammaGraph, point: Fraction,
               depth: int | None = None) -> BoundaryAddress:
    backend = spec.backend
    if not hasattr(backend, "address_chain"):
        raise SystemError("address_of requires the geometric-circle backend")
    depth = g.depth if depth is None else depth
    return BoundaryAddress.from_addresses(g, backend.address_chain(point, depth))


def dist_to_boundary(g: GammaGraph, p: MetricParams, v: int) -> tuple[float, float]:
    """(lower, upper) enclosure-style bounds for the distance to the boundary."""
    if v == g.o:
        raise ValueError("v must differ from o")
    eps = p.epsilon
    lower = math.exp(-eps * g.level(v)) / eps
    bottom = set(g.spheres[g.depth])
    dist = dijkstra(g, p, v, bottom)
    upper = min(dist[w] for w in bottom) + math.exp(-eps * g.depth) / eps
    return lower, upper


def _descent_floor(level: int, depth: int, eps: float) -> float:
    """Cheapest possible cost of reaching the truncation depth from a level."""
    return (math.exp(-eps * level) - math.exp(-eps * depth)) / eps


def safe_radius(g: GammaGraph, p: MetricParams, xi: int) -> float:
    """Largest r such that both balls in the mapping law stay clear of the
    truncation depth and of the base point."""
    eps = p.epsilon
    fxi = g.F[xi]
    r1 = _descent_floor(g.level(fxi), g.depth, eps)
    r2 = _descent_floor(g.level(xi), g.depth, eps) * math.exp(eps)
    r3 = vertex_norm(g.level(fxi), eps)
    return min(r1, r2, r3)


def ball_vertices(g: GammaGraph, p: MetricParams, center: int, r: float) -> set[int]:
    dist = dijkstra(g, p, center)
    return {v for v in range(len(g.vertices)) if dist[v] < r}


def ball_image_check(g: GammaGraph, p: MetricParams, xi: int,
                     radii: list[float] | None = None, grid: int = 10) -> dict:
    """Check F(B(xi, r e^{-eps})) = B(F(xi), r) vertexwise on a radius grid."""
    if g.level(xi) < 2:
        raise ValueError("needs |xi| >= 2")
    eps = p.epsilon
    if radii is None:
        rmax = safe_radius(g, p, xi)
        radii = [rmax * (k + 1) / (grid + 1) for k in range(grid)]
    dist_xi = dijkstra(g, p, xi)
    dist_fxi = dijkstra(g, p, g.F[xi])
    violations = []
    for r in radii:
        src = {v for v in range(len(g.vertices)) if dist_xi[v] < r * math.exp(-eps)}
        image = {g.F[v] for v in src}
        target = {v for v in range(len(g.vertices)) if dist_fxi[v] < r}
        if image != target:
            violations.append({"r": r, "extra": sorted(image - target),
                               "missing": sorted(target - image)})
    return {"vertex": xi, "radii": radii, "violations": violations}
