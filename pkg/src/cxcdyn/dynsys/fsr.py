"""Finite subdivision rules on the sphere, realized as the double of a polygon.

The complex at level k is the k-th subdivision of a two-face base complex
(front and back copy of a triangle or square glued along the boundary).  The
dynamics is a cellular branched covering f mapping level k+1 onto level k;
it is pinned by a single seed tile assignment and extended over the level-1
tiles by continuation across shared edges, then propagated to deeper levels
through the affine naturality of the subdivision.

The level-0 cover is built from tile stars: for the smallest (n0, n1) such
that every star of a level-n0 tile inside the level-(n0+n1) subdivision is a
closed disk holding at most one postcritical point, and that point interior,
the cover consists of those star interiors.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

from .types import (
    CellAddress,
    CoverElement,
    PreimageRule,
    RuleComponent,
    SystemSpec,
    SystemError,
    sorted_addresses,
)

Point = tuple[int, Fraction, Fraction]  # (side, x, y) in the polygon's affine frame


def _mean(points: list[Point], side: int) -> Point:
    n = len(points)
    x = sum((p[1] for p in points), Fraction(0)) / n
    y = sum((p[2] for p in points), Fraction(0)) / n
    return (side, x, y)


class Polygon:
    """Base polygon geometry: boundary facets and the Euclidean embedding."""

    def __init__(self, kind: str):
        if kind == "triangle":
            self.corners = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)),
                            (Fraction(0), Fraction(1))]
        elif kind == "square":
            self.corners = [(Fraction(0), Fraction(0)), (Fraction(1), Fraction(0)),
                            (Fraction(1), Fraction(1)), (Fraction(0), Fraction(1))]
        else:
            raise SystemError(f"unknown polygon kind {kind!r}")
        self.kind = kind

    def on_boundary(self, x: Fraction, y: Fraction) -> bool:
        if self.kind == "triangle":
            return x == 0 or y == 0 or x + y == 1
        return x == 0 or x == 1 or y == 0 or y == 1

    def same_facet(self, p: Point, q: Point) -> bool:
        """Both points on one boundary facet (so their segment lies on the seam)."""
        checks = ([lambda a, b: a == 0, lambda a, b: b == 0, lambda a, b: a + b == 1]
                  if self.kind == "triangle" else
                  [lambda a, b: a == 0, lambda a, b: a == 1,
                   lambda a, b: b == 0, lambda a, b: b == 1])
        return any(c(p[1], p[2]) and c(q[1], q[2]) for c in checks)

    def canonical(self, side: int, x: Fraction, y: Fraction) -> Point:
        return (0 if self.on_boundary(x, y) else side, x, y)

    def embed(self, p: Point) -> tuple[float, float]:
        if self.kind == "triangle":
            # equilateral embedding of the affine frame
            return (float(p[1]) + 0.5 * float(p[2]), float(p[2]) * math.sqrt(3) / 2)
        return (float(p[1]), float(p[2]))


@dataclass
class Level:
    """One subdivision level: vertices shared with all finer levels by id."""

    verts: list[Point]
    vert_ids: dict[Point, int]
    edges: list[tuple[int, int]]
    edge_ids: dict[frozenset, int]
    faces: list[tuple[int, ...]]            # oriented corner ids
    face_side: list[int]
    edge_faces: dict[int, list[int]] = field(default_factory=dict)
    vert_faces: dict[int, list[int]] = field(default_factory=dict)
    # subdivision records (filled when the next level is built)
    edge_children: dict[int, tuple[int, int, int]] = field(default_factory=dict)   # e -> (e1, e2, mid vertex)
    face_children: dict[int, list[int]] = field(default_factory=dict)
    face_interior_edges: dict[int, list[int]] = field(default_factory=dict)
    face_interior_verts: dict[int, list[int]] = field(default_factory=dict)

    def add_vert(self, p: Point) -> int:
        vid = self.vert_ids.get(p)
        if vid is None:
            vid = len(self.verts)
            self.verts.append(p)
            self.vert_ids[p] = vid
        return vid

    def add_edge(self, u: int, v: int) -> int:
        key = frozenset((u, v))
        eid = self.edge_ids.get(key)
        if eid is None:
            eid = len(self.edges)
            self.edges.append((u, v))
            self.edge_ids[key] = eid
        return eid

    def add_face(self, corners: tuple[int, ...], side: int) -> int:
        fid = len(self.faces)
        self.faces.append(corners)
        self.face_side.append(side)
        return fid

    def finalize(self) -> None:
        self.edge_faces = {e: [] for e in range(len(self.edges))}
        self.vert_faces = {v: [] for v in range(len(self.verts))}
        self._face_edges: list[list[int]] = []
        for fid, corners in enumerate(self.faces):
            k = len(corners)
            eids = []
            for i in range(k):
                u, v = corners[i], corners[(i + 1) % k]
                eid = self.edge_ids[frozenset((u, v))]
                eids.append(eid)
                self.edge_faces[eid].append(fid)
            self._face_edges.append(eids)
            for v in corners:
                self.vert_faces[v].append(fid)

    def face_edge_ids(self, fid: int) -> list[int]:
        return self._face_edges[fid]

    def vertex_rotation(self, v: int) -> list[int]:
        """Faces around a vertex in cyclic order (walked through shared edges)."""
        faces = self.vert_faces[v]
        if len(faces) <= 2:
            return list(faces)
        edges_at_v: dict[int, list[int]] = {}
        for f in faces:
            edges_at_v[f] = [e for e in self.face_edge_ids(f) if v in self.edges[e]]
        cycle = [faces[0]]
        prev_edge = edges_at_v[faces[0]][0]
        cur = faces[0]
        while True:
            nxt_edge = next(e for e in edges_at_v[cur] if e != prev_edge)
            nxt_face = next(f for f in self.edge_faces[nxt_edge] if f != cur)
            if nxt_face == cycle[0]:
                break
            cycle.append(nxt_face)
            prev_edge = nxt_edge
            cur = nxt_face
        return cycle

    def face_link(self, fid: int) -> list[int]:
        """Neighboring faces in cyclic order around a face, following its
        stored boundary orientation (globally consistent on the surface)."""
        corners = self.faces[fid]
        k = len(corners)
        eids = self.face_edge_ids(fid)
        out: list[int] = []
        for i in range(k):
            e_in, e_out = eids[i], eids[(i + 1) % k]
            v = corners[(i + 1) % k]
            across_in = next(f for f in self.edge_faces[e_in] if f != fid)
            across_out = next(f for f in self.edge_faces[e_out] if f != fid)
            rot = self.vertex_rotation(v)
            if fid in rot and len(rot) > 2:
                pos = rot.index(fid)
                path = rot[pos + 1:] + rot[:pos]  # the cycle cut open at fid
                if path and path[0] != across_in:
                    path = path[::-1]
                if path and (path[0] != across_in or path[-1] != across_out):
                    raise SystemError("vertex rotation does not close the face link")
            else:
                path = [f for f in rot if f != fid]
            for f in path:
                if not out or out[-1] != f:
                    out.append(f)
        if len(out) > 1 and out[0] == out[-1]:
            out.pop()
        return out


class SubdivisionComplex:
    """Tower of subdivision levels with the cellular dynamics between them."""

    def __init__(self, kind: str, seed_builder):
        self.polygon = Polygon("triangle" if kind == "barycentric" else "square")
        self.kind = kind
        base = Level([], {}, [], {}, [], [])
        corners = [base.add_vert(self.polygon.canonical(0, x, y))
                   for x, y in self.polygon.corners]
        k = len(corners)
        for i in range(k):
            base.add_edge(corners[i], corners[(i + 1) % k])
        base.add_face(tuple(corners), 0)
        base.add_face(tuple([corners[0]] + corners[1:][::-1]), 1)
        base.finalize()
        self.levels: list[Level] = [base]
        self.subdivide()  # level 1 must exist before the seed map is built
        # cell maps f_k : level k -> level k-1, index k-1
        self.fv: list[dict[int, int]] = []
        self.fe: list[dict[int, int]] = []
        self.ff: list[dict[int, int]] = []
        seed_builder(self)
        self._build_base_map()

    # --- subdivision ---------------------------------------------------

    def subdivide(self) -> Level:
        cur = self.levels[-1]
        poly = self.polygon
        nxt = Level(list(cur.verts), dict(cur.vert_ids), [], {}, [], [])
        for eid, (u, v) in enumerate(cur.edges):
            pu, pv = cur.verts[u], cur.verts[v]
            side = pu[0] if pu[0] == pv[0] and pu[0] != 0 else None
            if side is None:
                # take the side from an incident face unless the edge lies on the seam
                side = 0 if poly.same_facet(pu, pv) else cur.face_side[cur.edge_faces[eid][0]]
            mid = poly.canonical(side, (pu[1] + pv[1]) / 2, (pu[2] + pv[2]) / 2)
            m = nxt.add_vert(mid)
            e1 = nxt.add_edge(u, m)
            e2 = nxt.add_edge(m, v)
            cur.edge_children[eid] = (e1, e2, m)
        for fid, corners in enumerate(cur.faces):
            side = cur.face_side[fid]
            pts = [cur.verts[c] for c in corners]
            mids = [cur.edge_children[e][2] for e in cur.face_edge_ids(fid)]
            center = nxt.add_vert(_mean(pts, side))
            children: list[tuple[int, ...]] = []
            if poly.kind == "triangle":
                a, b, c = corners
                mab, mbc, mca = mids
                children = [(a, mab, center), (mab, b, center), (b, mbc, center),
                            (mbc, c, center), (c, mca, center), (mca, a, center)]
            else:
                a, b, c, d = corners
                mab, mbc, mcd, mda = mids
                children = [(a, mab, center, mda), (mab, b, mbc, center),
                            (center, mbc, c, mcd), (mda, center, mcd, d)]
            int_edges = set()
            child_ids = []
            for ch in children:
                kch = len(ch)
                for i in range(kch):
                    u, v = ch[i], ch[(i + 1) % kch]
                    e = nxt.add_edge(u, v)
                    if center in (u, v):
                        int_edges.add(e)
                child_ids.append(nxt.add_face(ch, side))
            cur.face_children[fid] = child_ids
            cur.face_interior_edges[fid] = sorted(int_edges)
            cur.face_interior_verts[fid] = [center]
        nxt.finalize()
        self.levels.append(nxt)
        return nxt

    def ensure_level(self, k: int) -> None:
        while len(self.levels) <= k:
            self.subdivide()
        while len(self.fv) < len(self.levels) - 1:
            self._extend_map()

    # --- the dynamics --------------------------------------------------

    def _build_base_map(self) -> None:
        """Extend the seed tile assignment over all level-1 tiles by continuation."""
        lv1, lv0 = self.levels[1], self.levels[0]
        fv: dict[int, int] = dict(self._seed_vmap)
        ff: dict[int, int] = {self._seed_face: self._seed_image}
        queue = [self._seed_face]
        while queue:
            t = queue.pop()
            corners = lv1.faces[t]
            img_face = ff[t]
            img_corners = lv0.faces[img_face]
            for i in range(len(corners)):
                u, v = corners[i], corners[(i + 1) % len(corners)]
                eid = lv1.edge_ids[frozenset((u, v))]
                img_edge = lv0.edge_ids.get(frozenset((fv[u], fv[v])))
                if img_edge is None:
                    raise SystemError("seed map does not extend across an edge")
                others = [x for x in lv1.edge_faces[eid] if x != t]
                img_others = [x for x in lv0.edge_faces[img_edge] if x != img_face]
                if len(others) != 1 or len(img_others) != 1:
                    raise SystemError("complex is not a closed surface")
                t2, img2 = others[0], img_others[0]
                c2, ic2 = lv1.faces[t2], lv0.faces[img2]
                # t2 traverses the shared edge opposite to t; align traversals
                i2 = next(j for j in range(len(c2))
                          if (c2[j], c2[(j + 1) % len(c2)]) in ((v, u), (u, v)))
                x, y = c2[i2], c2[(i2 + 1) % len(c2)]
                j2 = next((j for j in range(len(ic2))
                           if ic2[j] == fv[x] and ic2[(j + 1) % len(ic2)] == fv[y]), None)
                if j2 is None:
                    raise SystemError("orientation mismatch while extending the map")
                new_assign = {}
                for k in range(len(c2)):
                    new_assign[c2[(i2 + k) % len(c2)]] = ic2[(j2 + k) % len(ic2)]
                for vtx, img in new_assign.items():
                    if fv.setdefault(vtx, img) != img:
                        raise SystemError("inconsistent vertex images in the rule")
                if t2 in ff:
                    if ff[t2] != img2:
                        raise SystemError("inconsistent tile images in the rule")
                else:
                    ff[t2] = img2
                    queue.append(t2)
        if len(ff) != len(lv1.faces):
            raise SystemError("level-1 tiles are not edge-connected")
        fe = {}
        for eid, (u, v) in enumerate(lv1.edges):
            img = lv0.edge_ids.get(frozenset((fv[u], fv[v])))
            if img is None:
                raise SystemError("edge image missing in base map")
            fe[eid] = img
        self.fv.append(fv)
        self.fe.append(fe)
        self.ff.append(ff)
        self.degree = self._check_degree()

    def _check_degree(self) -> int:
        """The covering degree, verified to be constant over base faces."""
        counts: dict[int, int] = {}
        for t, img in self.ff[0].items():
            counts[img] = counts.get(img, 0) + 1
        degs = set(counts.values())
        if len(degs) != 1:
            raise SystemError("tile counts differ over base faces")
        return degs.pop()

    def _extend_map(self) -> None:
        k = len(self.fv)  # building f_{k+1} : level k+1 -> level k
        if len(self.levels) <= k + 1:
            raise SystemError("subdivide before extending the cell map")
        src, dst = self.levels[k + 1], self.levels[k]
        below = self.levels[k - 1]
        fv_prev, fe_prev, ff_prev = self.fv[-1], self.fe[-1], self.ff[-1]
        fv: dict[int, int] = {}
        for vid in range(len(self.levels[k].verts)):
            fv[vid] = fv_prev[vid]  # persistent ids: old vertices keep images
        for eid in range(len(self.levels[k].edges)):
            _, _, mid = self.levels[k].edge_children[eid]
            fv[mid] = below.edge_children[fe_prev[eid]][2]
        for fid in range(len(self.levels[k].faces)):
            (center,) = self.levels[k].face_interior_verts[fid]
            fv[center] = below.face_interior_verts[ff_prev[fid]][0]
        fe = {}
        for eid, (u, v) in enumerate(src.edges):
            img = dst.edge_ids.get(frozenset((fv[u], fv[v])))
            if img is None:
                raise SystemError("edge image missing while extending the map")
            fe[eid] = img
        face_lookup: dict[frozenset, int] = {}
        for fid, corners in enumerate(dst.faces):
            key = frozenset(corners)
            if key in face_lookup:
                raise SystemError("ambiguous face lookup")
            face_lookup[key] = fid
        ff = {}
        for fid, corners in enumerate(src.faces):
            img = face_lookup.get(frozenset(fv[c] for c in corners))
            if img is None:
                raise SystemError("face image missing while extending the map")
            ff[fid] = img
        self.fv.append(fv)
        self.fe.append(fe)
        self.ff.append(ff)

    # --- derived data ---------------------------------------------------

    def vertex_local_degree(self, vid: int) -> int:
        """Local multiplicity of the dynamics at a level-1 vertex."""
        lv1, lv0 = self.levels[1], self.levels[0]
        img = self.fv[0][vid]
        n1, n0 = len(lv1.vert_faces[vid]), len(lv0.vert_faces[img])
        if n1 % n0:
            raise SystemError("non-integer local degree at a vertex")
        return n1 // n0

    def branch_vertices(self) -> list[int]:
        return [v for v in range(len(self.levels[1].verts))
                if self.vertex_local_degree(v) > 1]

    def postcritical_points(self) -> set[Point]:
        """Forward orbit closure of the branch values, as geometric points."""
        lv0, lv1 = self.levels[0], self.levels[1]
        current = {lv0.verts[self.fv[0][v]] for v in self.branch_vertices()}
        out: set[Point] = set()
        while current - out:
            out |= current
            nxt = set()
            for p in current:
                vid1 = lv1.vert_ids[p]  # base vertices persist into level 1
                nxt.add(lv0.verts[self.fv[0][vid1]])
            current = nxt
        return out

    def embed(self, p: Point) -> tuple[float, float]:
        return self.polygon.embed(p)


def _barycentric_seed(cx: SubdivisionComplex) -> None:
    lv0, lv1 = cx.levels[0], cx.levels[1]
    a, b, c = lv0.faces[0]
    mbc = lv0.edge_children[lv0.edge_ids[frozenset((b, c))]][2]
    g = lv0.face_interior_verts[0][0]
    seed = next(f for f, corners in enumerate(lv1.faces)
                if set(corners) == {c, mbc, g})
    cx._seed_face = seed
    cx._seed_image = 0
    cx._seed_vmap = {c: c, mbc: b, g: a}


def _pillow_seed(cx: SubdivisionComplex) -> None:
    lv0, lv1 = cx.levels[0], cx.levels[1]
    a, b, c, d = lv0.faces[0]
    mab = lv0.edge_children[lv0.edge_ids[frozenset((a, b))]][2]
    mda = lv0.edge_children[lv0.edge_ids[frozenset((d, a))]][2]
    ctr = lv0.face_interior_verts[0][0]
    seed = next(f for f, corners in enumerate(lv1.faces)
                if set(corners) == {a, mab, ctr, mda})
    cx._seed_face = seed
    cx._seed_image = 0
    cx._seed_vmap = {a: a, mab: b, ctr: c, mda: d}


# --- star cover --------------------------------------------------------

# open cells are packed as integers: idx * 3 + dim (dim 0 vertex, 1 edge, 2 face)
Cell = int


def _cell(dim: int, idx: int) -> Cell:
    return idx * 3 + dim


def _closure_vertices(level: Level, face_set: set[int]) -> set[int]:
    out: set[int] = set()
    for f in face_set:
        out.update(level.faces[f])
        for e in level.face_edge_ids(f):
            u, v = level.edges[e]
            out.add(u)
            out.add(v)
    return out


def _star(level: Level, tile_faces: set[int]) -> set[int]:
    verts = _closure_vertices(level, tile_faces)
    out = set()
    for v in verts:
        out.update(level.vert_faces[v])
    return out


def _is_closed_disk(level: Level, faces: set[int]) -> bool:
    if not faces:
        return False
    # edge-connectivity
    seen = {next(iter(faces))}
    queue = [next(iter(faces))]
    edges_in: dict[int, int] = {}
    for f in faces:
        for e in level.face_edge_ids(f):
            edges_in[e] = edges_in.get(e, 0) + 1
    while queue:
        f = queue.pop()
        for e in level.face_edge_ids(f):
            for g in level.edge_faces[e]:
                if g in faces and g not in seen:
                    seen.add(g)
                    queue.append(g)
    if seen != faces:
        return False
    verts = _closure_vertices(level, faces)
    chi = len(verts) - len(edges_in) + len(faces)
    if chi != 1:
        return False
    boundary = [e for e, cnt in edges_in.items() if cnt == 1]
    # single cycle without pinch points
    deg: dict[int, int] = {}
    for e in boundary:
        for v in level.edges[e]:
            deg[v] = deg.get(v, 0) + 1
    return all(d == 2 for d in deg.values())


def _interior_cells(level: Level, faces: set[int]) -> frozenset[Cell]:
    """Open cells of the interior of a closed tile union."""
    cells: set[Cell] = {_cell(2, f) for f in faces}
    for f in faces:
        for e in level.face_edge_ids(f):
            if all(g in faces for g in level.edge_faces[e]):
                cells.add(_cell(1, e))
    for v in _closure_vertices(level, faces):
        if all(g in faces for g in level.vert_faces[v]):
            cells.add(_cell(0, v))
    return frozenset(cells)


def find_star_parameters(cx: SubdivisionComplex, max_n0: int = 3,
                         max_n1: int = 4) -> tuple[int, int]:
    """Smallest (n0, n1), lexicographically, making every tile star a good disk."""
    post = cx.postcritical_points()
    for n0 in range(1, max_n0 + 1):
        for n1 in range(0, max_n1 + 1):
            cx.ensure_level(n0 + n1)
            if _star_cover_ok(cx, n0, n1, post):
                return n0, n1
    raise SystemError("no admissible star parameters in the search range")


def _star_cover_ok(cx: SubdivisionComplex, n0: int, n1: int, post: set[Point]) -> bool:
    fine = cx.levels[n0 + n1]
    for tile in range(len(cx.levels[n0].faces)):
        faces = _descendant_faces(cx, n0, tile, n0 + n1)
        star = _star(fine, faces)
        if not _is_closed_disk(fine, star):
            return False
        hits = [p for p in post if p in fine.vert_ids and _point_in_faces(fine, p, star)]
        if len(hits) > 1:
            return False
        for p in hits:
            vid = fine.vert_ids[p]
            if not all(f in star for f in fine.vert_faces[vid]):
                return False  # postcritical point not interior
    return True


def _point_in_faces(level: Level, p: Point, faces: set[int]) -> bool:
    vid = level.vert_ids.get(p)
    if vid is None:
        return False
    return any(f in faces for f in level.vert_faces[vid])


def _descendant_faces(cx: SubdivisionComplex, lvl: int, face: int, target: int) -> set[int]:
    faces = {face}
    for k in range(lvl, target):
        faces = {ch for f in faces for ch in cx.levels[k].face_children[f]}
    return faces


# --- backend -----------------------------------------------------------

@dataclass
class FsrElement:
    cells: frozenset[Cell]
    complex_level: int
    degree: int  # onto its pullback parent; 1 for level-1 cover elements


class FsrBackend:
    def __init__(self, cx: SubdivisionComplex, n0: int, n1: int):
        self.cx = cx
        self.n0, self.n1 = n0, n1
        self.cover_level = n0 + n1
        self.degree = cx.degree
        fine = cx.levels[self.cover_level]
        self._elements: dict[CellAddress, FsrElement] = {}
        self._children: dict[CellAddress, list[tuple[CellAddress, int]]] = {}
        self._rev: dict[int, dict[Cell, list[Cell]]] = {}
        self._roots: list[str] = []
        self.seed_tiles: dict[str, int] = {}
        for tile in range(len(cx.levels[n0].faces)):
            name = f"U{tile:02d}"
            faces = _descendant_faces(cx, n0, tile, self.cover_level)
            cells = _interior_cells(fine, _star(fine, faces))
            self._elements[CellAddress(name)] = FsrElement(cells, self.cover_level, 1)
            self._roots.append(name)
            self.seed_tiles[name] = tile
        self._levels: dict[int, list[CellAddress]] = {
            1: sorted_addresses([CellAddress(r) for r in self._roots])
        }

    def element(self, addr: CellAddress) -> FsrElement:
        el = self._elements.get(addr)
        if el is None:
            self.preimage_components(addr.parent())
            el = self._elements[addr]
        return el

    def _reverse_map(self, lvl: int) -> dict[Cell, list[Cell]]:
        """Preimage cells at complex level lvl+1 of each cell at level lvl."""
        rv = self._rev.get(lvl)
        if rv is None:
            self.cx.ensure_level(lvl + 1)
            rv = {}
            for fid, img in self.cx.ff[lvl].items():
                rv.setdefault(img * 3 + 2, []).append(fid * 3 + 2)
            for eid, img in self.cx.fe[lvl].items():
                rv.setdefault(img * 3 + 1, []).append(eid * 3 + 1)
            for vid, img in self.cx.fv[lvl].items():
                rv.setdefault(img * 3, []).append(vid * 3)
            self._rev[lvl] = rv
        return rv

    def preimage_components(self, addr: CellAddress) -> list[tuple[CellAddress, int]]:
        got = self._children.get(addr)
        if got is not None:
            return got
        parent = self.element(addr)
        lvl = parent.complex_level
        rv = self._reverse_map(lvl)
        fine = self.cx.levels[lvl + 1]
        ff = self.cx.ff[lvl]
        pulled: set[Cell] = set()
        for cell in parent.cells:
            pulled.update(rv.get(cell, ()))
        comps = _cell_components(fine, pulled)
        base_face = next(c for c in parent.cells if c % 3 == 2) // 3
        out = []
        comps.sort(key=lambda cells: min(c // 3 for c in cells if c % 3 == 2))
        for idx, cells in enumerate(comps):
            deg = sum(1 for c in cells if c % 3 == 2 and ff[c // 3] == base_face)
            child = addr.child(idx)
            self._elements[child] = FsrElement(frozenset(cells), lvl + 1, deg)
            out.append((child, deg))
        if sum(d for _, d in out) != self.degree:
            raise SystemError("pullback degrees do not sum to the covering degree")
        self._children[addr] = out
        return out

    def enumerate_level(self, n: int) -> list[CellAddress]:
        got = self._levels.get(n)
        if got is not None:
            return got
        prev = self.enumerate_level(n - 1)
        out = []
        for a in prev:
            out.extend(c for c, _ in self.preimage_components(a))
        out = sorted_addresses(out)
        self._levels[n] = out
        return out

    def refine_cells(self, cells: frozenset[Cell], lvl: int) -> frozenset[Cell]:
        level = self.cx.levels[lvl]
        out: set[Cell] = set()
        for c in cells:
            dim, i = c % 3, c // 3
            if dim == 0:
                out.add(c)
            elif dim == 1:
                e1, e2, mid = level.edge_children[i]
                out.update((e1 * 3 + 1, e2 * 3 + 1, mid * 3))
            else:
                out.update(ch * 3 + 2 for ch in level.face_children[i])
                out.update(e * 3 + 1 for e in level.face_interior_edges[i])
                out.update(v * 3 for v in level.face_interior_verts[i])
        return frozenset(out)

    def cells_at(self, addr: CellAddress, target_level: int) -> frozenset[Cell]:
        el = self.element(addr)
        cells, lvl = el.cells, el.complex_level
        while lvl < target_level:
            self.cx.ensure_level(lvl + 1)
            cells = self.refine_cells(cells, lvl)
            lvl += 1
        return cells

    def intersects(self, a: CellAddress, b: CellAddress) -> bool:
        if a == b:
            return True
        la = self.element(a).complex_level
        lb = self.element(b).complex_level
        lvl = max(la, lb)
        return bool(self.cells_at(a, lvl) & self.cells_at(b, lvl))

    def contains(self, outer: CellAddress, inner: CellAddress) -> bool:
        lvl = max(self.element(outer).complex_level, self.element(inner).complex_level)
        return self.cells_at(inner, lvl) <= self.cells_at(outer, lvl)

    def overlapping_pairs(self, addrs_a, addrs_b):
        if not addrs_a or not addrs_b:
            return set()
        lvl = max(max(self.element(a).complex_level for a in addrs_a),
                  max(self.element(b).complex_level for b in addrs_b))
        index: dict[Cell, list[CellAddress]] = {}
        for a in addrs_a:
            for cell in self.cells_at(a, lvl):
                index.setdefault(cell, []).append(a)
        pairs = set()
        for b in addrs_b:
            hits = set()
            for cell in self.cells_at(b, lvl):
                hits.update(index.get(cell, ()))
            hits.discard(b)
            pairs.update((a, b) for a in hits)
        return pairs

    def element_diameter(self, addr: CellAddress) -> float:
        """Diameter surrogate: Euclidean within a side, via seam vertices across.

        Exact for single-side elements; an upper bound otherwise.
        """
        import numpy as np

        el = self.element(addr)
        level = self.cx.levels[el.complex_level]
        vids = set()
        for c in el.cells:
            dim, i = c % 3, c // 3
            if dim == 0:
                vids.add(i)
            elif dim == 1:
                vids.update(level.edges[i])
            else:
                vids.update(level.faces[i])
        pts = [level.verts[v] for v in vids]
        emb = np.array([self.cx.embed(p) for p in pts])
        # 0 = seam (shared boundary), 1 = front interior, 2 = back interior
        cls = np.array([0 if self.cx.polygon.on_boundary(p[1], p[2]) else 1 + p[0]
                        for p in pts])
        best = 0.0
        for s in (1, 2):
            grp = emb[(cls == s) | (cls == 0)]
            if len(grp) > 1:
                diff = grp[:, None, :] - grp[None, :, :]
                best = max(best, float(np.sqrt((diff ** 2).sum(-1)).max()))
        g1, g2, seam = emb[cls == 1], emb[cls == 2], emb[cls == 0]
        if len(g1) and len(g2) and len(seam):
            d1 = np.sqrt(((g1[:, None, :] - seam[None, :, :]) ** 2).sum(-1))
            d2 = np.sqrt(((g2[:, None, :] - seam[None, :, :]) ** 2).sum(-1))
            through = (d1[:, None, :] + d2[None, :, :]).min(-1)
            best = max(best, float(through.max()))
        return best

    def tile_diameters(self, complex_level: int) -> list[float]:
        self.cx.ensure_level(complex_level)
        level = self.cx.levels[complex_level]
        out = []
        for corners in level.faces:
            emb = [self.cx.embed(level.verts[v]) for v in corners]
            out.append(max(math.dist(p, q) for p in emb for q in emb))
        return out


def _cell_components(level: Level, cells: set[Cell]) -> list[set[Cell]]:
    """Connected components of an open cell set (faces, edges, vertices)."""
    parent: dict[Cell, Cell] = {c: c for c in cells}

    def find(c):
        while parent[c] != c:
            parent[c] = parent[parent[c]]
            c = parent[c]
        return c

    def union(a, b):
        ra, rb = find(a), find(b)
        if ra != rb:
            parent[ra] = rb

    for c in cells:
        dim, i = c % 3, c // 3
        if dim == 2:
            for e in level.face_edge_ids(i):
                ec = e * 3 + 1
                if ec in parent:
                    union(c, ec)
            for v in level.faces[i]:
                vc = v * 3
                if vc in parent:
                    union(c, vc)
        elif dim == 1:
            for v in level.edges[i]:
                vc = v * 3
                if vc in parent:
                    union(c, vc)
    groups: dict[Cell, set[Cell]] = {}
    for c in cells:
        groups.setdefault(find(c), set()).add(c)
    return list(groups.values())


def fsr_system(kind: str) -> SystemSpec:
    """Built-in subdivision-rule systems on the doubled polygon sphere."""
    if kind == "barycentric":
        cx = SubdivisionComplex("barycentric", _barycentric_seed)
    elif kind == "pillow":
        cx = SubdivisionComplex("pillow", _pillow_seed)
    else:
        raise SystemError(f"unknown subdivision rule {kind!r}")
    n0, n1 = find_star_parameters(cx)
    backend = FsrBackend(cx, n0, n1)
    elements = [CoverElement(id=r, tile=backend.seed_tiles[r]) for r in backend._roots]
    rules = {}
    for r in backend._roots:
        comps = backend.preimage_components(CellAddress(r))
        rules[r] = PreimageRule(
            image_id=r,
            components=tuple(RuleComponent(index=i, degree=d)
                             for i, (_, d) in enumerate(comps)),
        )
    return SystemSpec(
        degree=cx.degree,
        elements=elements,
        rules=rules,
        tokens=[],
        backend_name="fsr",
        backend=backend,
        name=kind,
    )
