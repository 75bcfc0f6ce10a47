"""The layered graph associated to a system: spheres, edges, degrees and the
level-decreasing self-map F.

Vertices are the base point o at level 0 plus one vertex per cover-pullback
element; S(n) collects the level-n vertices and is the combinatorial sphere
of radius n about o.  Edges join elements whose levels differ by at most one
and which meet on the repellor.  F drops the last address letter (one
application of the covering map) and sends S(1) and o to o.
"""

from __future__ import annotations

import csv
import io
import json
from collections import deque
from dataclasses import dataclass, field

from .dynsys.types import BudgetError, CellAddress, SystemSpec, sorted_addresses


@dataclass(frozen=True)
class Vertex:
    index: int
    level: int
    address: CellAddress | None  # None for the base point o
    degree: int                  # d(W) = deg of the covering onto the root
    last_degree: int             # d_F(W); 1 at levels 0 and 1

    def __repr__(self) -> str:
        return "o" if self.address is None else repr(self.address)


@dataclass
class GammaGraph:
    spec: SystemSpec
    depth: int
    vertices: list[Vertex]
    spheres: list[list[int]]              # level -> vertex indices
    adjacency: list[list[int]]            # sorted neighbor indices
    F: list[int]                          # vertex index -> image vertex index
    index_of: dict[CellAddress, int] = field(repr=False, default_factory=dict)

    @property
    def o(self) -> int:
        return 0

    def sphere(self, n: int) -> list[int]:
        return self.spheres[n]

    def vertex(self, i: int) -> Vertex:
        return self.vertices[i]

    def level(self, i: int) -> int:
        return self.vertices[i].level

    def neighbors(self, i: int) -> list[int]:
        return self.adjacency[i]

    def edges(self):
        for u in range(len(self.vertices)):
            for v in self.adjacency[u]:
                if u < v:
                    yield (u, v)

    def bfs_distances(self, source: int) -> list[int]:
        dist = [-1] * len(self.vertices)
        dist[source] = 0
        dq = deque([source])
        while dq:
            u = dq.popleft()
            for v in self.adjacency[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    dq.append(v)
        return dist


def build_graph(spec: SystemSpec, depth: int, budget_vertices: int = 2_000_000,
                check_spheres: bool = True) -> GammaGraph:
    """Build the graph to the given depth; exhaustively asserts the sphere property."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    backend = spec.backend
    vertices: list[Vertex] = [Vertex(0, 0, None, 1, 1)]
    spheres: list[list[int]] = [[0]]
    index_of: dict[CellAddress, int] = {}
    level_addrs: list[list[CellAddress]] = [[]]
    # level 1 from the cover, deeper levels by pullback (keeps degrees incremental)
    addrs = sorted_addresses([CellAddress(e.id) for e in spec.elements])
    for n in range(1, depth + 1):
        ids = []
        for a in addrs:
            if a.word:
                parent = vertices[index_of[a.parent()]]
                dF = _component_degree(spec, a)
                deg = parent.degree * dF
            else:
                deg, dF = 1, 1
            v = Vertex(len(vertices), n, a, deg, dF)
            index_of[a] = v.index
            vertices.append(v)
            ids.append(v.index)
        spheres.append(ids)
        level_addrs.append(addrs)
        if n < depth:
            nxt = []
            for a in addrs:
                nxt.extend(c for c, _ in backend.preimage_components(a))
            addrs = sorted_addresses(nxt)
            if len(vertices) + len(addrs) > budget_vertices:
                raise BudgetError(
                    f"graph would exceed {budget_vertices} vertices at level {n + 1}")
    adjacency: list[set[int]] = [set() for _ in vertices]
    for i in spheres[1]:
        adjacency[0].add(i)
        adjacency[i].add(0)
    for n in range(1, depth + 1):
        horiz = backend.overlapping_pairs(level_addrs[n], level_addrs[n])
        for a, b in horiz:
            u, v = index_of[a], index_of[b]
            adjacency[u].add(v)
            adjacency[v].add(u)
        if n < depth:
            vert = backend.overlapping_pairs(level_addrs[n], level_addrs[n + 1])
            for a, b in vert:
                u, v = index_of[a], index_of[b]
                adjacency[u].add(v)
                adjacency[v].add(u)
    F = [0] * len(vertices)
    for v in vertices[1:]:
        if v.level <= 1:
            F[v.index] = 0
        else:
            F[v.index] = index_of[v.address.parent()]
    g = GammaGraph(
        spec=spec,
        depth=depth,
        vertices=vertices,
        spheres=spheres,
        adjacency=[sorted(s) for s in adjacency],
        F=F,
        index_of=index_of,
    )
    if check_spheres:
        dist = g.bfs_distances(0)
        for v in vertices:
            if dist[v.index] != v.level:
                raise AssertionError(
                    f"sphere property fails at {v}: BFS {dist[v.index]} != level {v.level}")
    return g


def _component_degree(spec: SystemSpec, addr: CellAddress) -> int:
    backend = spec.backend
    if hasattr(backend, "element"):  # fsr: degrees live on the lazily built elements
        return backend.element(addr).degree
    return spec.last_step_degree(addr)


def F_of(g: GammaGraph, v: int) -> int:
    return g.F[v]


def preimages_of(g: GammaGraph, v: int) -> list[tuple[int, int]]:
    """F-preimages of a vertex with their multiplicities d_F; sums to the degree."""
    vert = g.vertex(v)
    if vert.level < 1:
        raise ValueError("preimages_of needs a vertex of level >= 1")
    if vert.level + 1 > g.depth:
        raise ValueError("depth exceeded: preimages live below the built graph")
    out = []
    for c, d in g.spec.backend.preimage_components(vert.address):
        out.append((g.index_of[c], d))
    return out


def sphere_size(g: GammaGraph, n: int) -> int:
    if not 0 <= n <= g.depth:
        raise ValueError(f"sphere {n} out of range 0..{g.depth}")
    return len(g.spheres[n])


def sphere_degree_sum(g: GammaGraph, n: int) -> int:
    return sum(g.vertex(i).degree for i in g.spheres[n])


def export_graph(g: GammaGraph, fmt: str = "json"):
    """Adjacency export: vertex id, level, d(W), neighbors, F image."""
    rows = [
        {
            "id": v.index,
            "label": repr(v),
            "level": v.level,
            "d": v.degree,
            "dF": v.last_degree,
            "neighbors": g.adjacency[v.index],
            "F": g.F[v.index],
        }
        for v in g.vertices
    ]
    if fmt == "json":
        return {"schema": "v1", "depth": g.depth, "vertices": rows}
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.writer(buf)
        w.writerow(["id", "label", "level", "d", "dF", "neighbors", "F"])
        for r in rows:
            w.writerow([r["id"], r["label"], r["level"], r["d"], r["dF"],
                        " ".join(map(str, r["neighbors"])), r["F"]])
        return buf.getvalue()
    raise ValueError(f"unknown export format {fmt!r}")
