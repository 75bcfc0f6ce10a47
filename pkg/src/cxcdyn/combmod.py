"""Combinatorial moduli of annuli over shinglings by discrete extremal length.

A curve is modeled as a chain of pairwise-overlapping shingles and its
rho-length sums the weights of the distinct shingles it meets.  The modulus
of a chain family minimizes the total area sum(rho^2) subject to every chain
having rho-length at least one; the optimizer runs cutting planes with a
shortest-chain separation oracle and solves each restricted problem through
its nonnegative dual by cyclic coordinate ascent.

Conventions: mod_sup(A) = 1/mod(transversal family), mod_inf(A) =
mod(separating family), and mod_inf <= mod_sup always (the discrete families
are not exactly reciprocal).
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field
from pathlib import Path


class ModulusError(Exception):
    pass


class NoChainError(ModulusError):
    """The family is empty (disconnected nerve): infinite-modulus signal."""


@dataclass
class Shingling:
    ids: list[str]
    nerve: set[frozenset]  # unordered overlapping pairs

    def __post_init__(self):
        if len(set(self.ids)) != len(self.ids):
            raise ModulusError("duplicate shingle ids")
        known = set(self.ids)
        for e in self.nerve:
            if len(e) != 2 or not e <= known:
                raise ModulusError(f"bad nerve edge {set(e)}")

    def neighbors(self) -> dict[str, list[str]]:
        out: dict[str, list[str]] = {s: [] for s in self.ids}
        for e in self.nerve:
            a, b = sorted(e)
            out[a].append(b)
            out[b].append(a)
        return {k: sorted(v) for k, v in out.items()}

    def overlap_bound(self) -> int:
        nb = self.neighbors()
        return 1 + max((len(v) for v in nb.values()), default=0)


@dataclass
class AnnulusProblem:
    shingling: Shingling
    inner: set[str]
    outer: set[str]
    slit: list[str]                       # a nerve path from inner to outer
    slit_sides: dict[str, dict[str, set[str]]] = field(default_factory=dict)
    # slit_sides[s] = {"left": {...}, "right": {...}} for non-slit neighbors of s
    separating_nerve: set[frozenset] | None = None
    # optional stricter adjacency for separating cycles (e.g. edge-adjacency of
    # tiles); keeps slit crossings pinch-free when the main nerve allows
    # single-point contacts

    def __post_init__(self):
        if not self.inner or not self.outer:
            raise ModulusError("boundary sets must be nonempty")
        if self.inner & self.outer:
            raise ModulusError("boundary sets must be disjoint")
        nb = self.separating_neighbors()
        for a, b in zip(self.slit, self.slit[1:]):
            if b not in nb[a]:
                raise ModulusError("slit is not a nerve path")

    def separating_neighbors(self) -> dict[str, list[str]]:
        if self.separating_nerve is None:
            return self.shingling.neighbors()
        return Shingling(self.shingling.ids, self.separating_nerve).neighbors()


@dataclass
class AdmissibleWeight:
    rho: dict[str, float]

    @property
    def area(self) -> float:
        return sum(v * v for v in self.rho.values())

    def length(self, chain: frozenset) -> float:
        return sum(self.rho[s] for s in chain)


# --- restricted QP: min sum(rho^2) s.t. chain sums >= 1 ------------------

def _solve_restricted(chains: list[frozenset], ids: list[str],
                      tol: float = 1e-13, sweeps: int = 10_000) -> dict[str, float]:
    """Cyclic coordinate ascent on the nonnegative dual.

    With incidence A, the dual maximizes 1'lam - (1/4) lam' A A' lam over
    lam >= 0 and the optimum weight is rho = A' lam / 2.
    """
    m = len(chains)
    gram = [[len(chains[i] & chains[j]) for j in range(m)] for i in range(m)]
    lam = [0.0] * m
    glam = [0.0] * m  # gram @ lam
    for _ in range(sweeps):
        delta = 0.0
        for i in range(m):
            if gram[i][i] == 0:
                continue
            step = (2.0 - glam[i]) / gram[i][i]
            new = max(0.0, lam[i] + step)
            d = new - lam[i]
            if d != 0.0:
                lam[i] = new
                gi = gram[i]
                for j in range(m):
                    glam[j] += d * gi[j]
                delta = max(delta, abs(d))
        if delta < tol:
            break
    rho = {s: 0.0 for s in ids}
    for lam_i, chain in zip(lam, chains):
        if lam_i > 0.0:
            for s in chain:
                rho[s] += lam_i / 2.0
    return rho


# --- separation oracles ---------------------------------------------------

def _shortest_transversal(problem: AnnulusProblem, rho: dict[str, float]
                          ) -> tuple[float, frozenset] | None:
    """Min-weight nerve chain from the inner to the outer set (node weights)."""
    nb = problem.shingling.neighbors()
    dist: dict[str, float] = {}
    back: dict[str, str | None] = {}
    heap = []
    for s in sorted(problem.inner):
        dist[s] = rho[s]
        back[s] = None
        heapq.heappush(heap, (rho[s], s))
    seen = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in seen:
            continue
        seen.add(u)
        if u in problem.outer:
            chain = []
            cur: str | None = u
            while cur is not None:
                chain.append(cur)
                cur = back[cur]
            return d, frozenset(chain)
        for v in nb[u]:
            nd = d + rho[v]
            if v not in dist or nd < dist[v] - 1e-18:
                dist[v] = nd
                back[v] = u
                heapq.heappush(heap, (nd, v))
    return None


def _shortest_separating(problem: AnnulusProblem, rho: dict[str, float]
                         ) -> tuple[float, frozenset] | None:
    """Min-weight closed chain crossing the slit once.

    Cut along the slit: for each contiguous slit subpath, the cycle is the
    subpath plus a chain from its right side back around to its left side
    through the slit's complement.
    """
    slit = problem.slit
    nb = problem.separating_neighbors()
    slit_set = set(slit)
    best: tuple[float, frozenset] | None = None
    for i in range(len(slit)):
        for j in range(i, len(slit)):
            seg = slit[i:j + 1]
            seg_weight = sum(rho[s] for s in seg)
            right = set()
            left = set()
            for s in seg:
                sides = problem.slit_sides.get(s, {})
                right |= set(sides.get("right", ())) - slit_set
                left |= set(sides.get("left", ())) - slit_set
            if not right or not left:
                continue
            hit = _shortest_avoiding(nb, rho, right, left, slit_set)
            if hit is None:
                continue
            w, chain = hit
            total = seg_weight + w
            cand = (total, frozenset(chain | set(seg)))
            if best is None or total < best[0] - 1e-18:
                best = cand
    return best


def _shortest_avoiding(nb, rho, sources: set[str], targets: set[str],
                       forbidden: set[str]) -> tuple[float, set[str]] | None:
    dist: dict[str, float] = {}
    back: dict[str, str | None] = {}
    heap = []
    for s in sorted(sources):
        if s in forbidden:
            continue
        dist[s] = rho[s]
        back[s] = None
        heapq.heappush(heap, (rho[s], s))
    seen = set()
    while heap:
        d, u = heapq.heappop(heap)
        if u in seen:
            continue
        seen.add(u)
        if u in targets:
            chain = set()
            cur: str | None = u
            while cur is not None:
                chain.add(cur)
                cur = back[cur]
            return d, chain
        for v in nb[u]:
            if v in forbidden:
                continue
            nd = d + rho[v]
            if v not in dist or nd < dist[v] - 1e-18:
                dist[v] = nd
                back[v] = u
                heapq.heappush(heap, (nd, v))
    return None


def modulus(problem: AnnulusProblem, family: str = "transversal",
            tol: float = 1e-6, max_rounds: int = 10_000
            ) -> tuple[float, AdmissibleWeight, list[frozenset]]:
    """Modulus of the chain family by cutting planes.

    Returns (sum of squared optimal weights, the weight, the active chains).
    Raises NoChainError when the family is empty.
    """
    if family in ("transversal", "t"):
        oracle = _shortest_transversal
    elif family in ("separating", "s"):
        oracle = _shortest_separating
    else:
        raise ModulusError(f"unknown family {family!r}")
    ids = problem.shingling.ids
    rho = {s: 0.0 for s in ids}
    first = oracle(problem, rho)
    if first is None:
        kind = "transversal" if oracle is _shortest_transversal else "separating"
        raise NoChainError(f"no {kind} chain exists")
    chains: list[frozenset] = [first[1]]
    for _ in range(max_rounds):
        rho = _solve_restricted(chains, ids)
        hit = oracle(problem, rho)
        if hit is None:
            raise NoChainError("family became empty during separation")
        w, chain = hit
        if w >= 1.0 - tol:
            weight = AdmissibleWeight(rho)
            return weight.area, weight, chains
        if chain in chains:
            raise ModulusError("separation repeated a chain without progress")
        chains.append(chain)
    raise ModulusError(f"no convergence within {max_rounds} cutting-plane rounds")


def mod_pair(problem: AnnulusProblem, tol: float = 1e-6) -> tuple[float, float]:
    """(mod_inf, mod_sup); asserts the discrete inequality mod_inf <= mod_sup."""
    mt, _, _ = modulus(problem, "transversal", tol)
    ms, _, _ = modulus(problem, "separating", tol)
    mod_sup = 1.0 / mt
    mod_inf = ms
    if mod_inf > mod_sup + tol:
        raise AssertionError(f"mod_inf {mod_inf} exceeds mod_sup {mod_sup}")
    return mod_inf, mod_sup


# --- ready-made instances --------------------------------------------------

def path_problem(k: int) -> AnnulusProblem:
    """A path of k shingles joining the two boundaries."""
    ids = [f"s{i}" for i in range(k)]
    nerve = {frozenset((ids[i], ids[i + 1])) for i in range(k - 1)}
    sh = Shingling(ids, nerve)
    return AnnulusProblem(sh, inner={ids[0]}, outer={ids[-1]}, slit=list(ids),
                          slit_sides={s: {"left": set(), "right": set()} for s in ids})


def parallel_chains_problem(m: int, k: int) -> AnnulusProblem:
    """m disjoint parallel chains of k shingles each."""
    ids = [f"c{i}_{j}" for i in range(m) for j in range(k)]
    nerve = {frozenset((f"c{i}_{j}", f"c{i}_{j + 1}"))
             for i in range(m) for j in range(k - 1)}
    sh = Shingling(ids, nerve)
    inner = {f"c{i}_0" for i in range(m)}
    outer = {f"c{i}_{k - 1}" for i in range(m)}
    slit = [f"c0_{j}" for j in range(k)]
    return AnnulusProblem(sh, inner=inner, outer=outer, slit=slit,
                          slit_sides={s: {"left": set(), "right": set()} for s in slit})


def ring_problem(around: int = 4, across: int = 2) -> AnnulusProblem:
    """Cylinder grid: ``around`` columns wrapping the annulus, ``across`` rows."""
    ids = [f"r{j}_{i}" for j in range(across) for i in range(around)]
    nerve = set()
    for j in range(across):
        for i in range(around):
            nerve.add(frozenset((f"r{j}_{i}", f"r{j}_{(i + 1) % around}")))
            if j + 1 < across:
                nerve.add(frozenset((f"r{j}_{i}", f"r{j + 1}_{i}")))
    sh = Shingling(ids, nerve)
    inner = {f"r0_{i}" for i in range(around)}
    outer = {f"r{across - 1}_{i}" for i in range(around)}
    slit = [f"r{j}_0" for j in range(across)]
    sides = {
        s: {"left": {f"r{j}_{around - 1}"}, "right": {f"r{j}_1"}}
        for j, s in enumerate(slit)
    }
    return AnnulusProblem(sh, inner=inner, outer=outer, slit=slit, slit_sides=sides)


def load_problem(source: str | Path | dict) -> AnnulusProblem:
    """JSON problem files: {shingles, nerve, inner, outer, slit, slit_sides?}."""
    data = source if isinstance(source, dict) else json.loads(Path(source).read_text())
    sh = Shingling(list(data["shingles"]),
                   {frozenset(e) for e in data["nerve"]})
    sides = {
        s: {"left": set(v.get("left", ())), "right": set(v.get("right", ()))}
        for s, v in data.get("slit_sides", {}).items()
    }
    return AnnulusProblem(sh, inner=set(data["inner"]), outer=set(data["outer"]),
                          slit=list(data["slit"]), slit_sides=sides)


# --- brute-force oracle ----------------------------------------------------

def enumerate_transversal_chains(problem: AnnulusProblem, cap: int = 100_000
                                 ) -> list[frozenset]:
    """All simple inner-to-outer nerve paths, as shingle sets."""
    nb = problem.shingling.neighbors()
    out: list[frozenset] = []

    def rec(u, path: list[str]):
        if len(out) > cap:
            raise ModulusError("chain enumeration exceeded cap")
        if u in problem.outer:
            out.append(frozenset(path))
            return
        for v in nb[u]:
            if v not in path and v not in problem.inner:
                path.append(v)
                rec(v, path)
                path.pop()

    for s in sorted(problem.inner):
        rec(s, [s])
    return sorted(set(out), key=sorted)


def brute_force_modulus(chains: list[frozenset], ids: list[str]) -> float:
    """Independent QP oracle over an explicit chain list (cvxopt)."""
    from cvxopt import matrix, solvers

    n = len(ids)
    pos = {s: i for i, s in enumerate(ids)}
    P = matrix([[2.0 if i == j else 0.0 for j in range(n)] for i in range(n)])
    q = matrix([0.0] * n)
    rows = []
    for c in chains:
        row = [0.0] * n
        for s in c:
            row[pos[s]] = -1.0
        rows.append(row)
    for i in range(n):  # rho >= 0
        row = [0.0] * n
        row[i] = -1.0
        rows.append(row)
    G = matrix(rows).T
    h = matrix([-1.0] * len(chains) + [0.0] * n)
    solvers.options["show_progress"] = False
    sol = solvers.qp(P, q, G, h)
    if sol["status"] != "optimal":
        raise ModulusError(f"QP oracle status {sol['status']}")
    rho = list(sol["x"])
    return sum(v * v for v in rho)


def conformality_scan(spec, annulus_center_vertex=None, levels: range | None = None,
                      tol: float = 1e-6) -> list[dict]:
    """Moduli of a fixed annulus against the subdivision tilings at a run of levels.

    Only for subdivision-rule systems; the annulus is the ring of tiles
    between the star of a 0-cell and the rest, refined level by level.
    Advisory: reports the (mod_inf, mod_sup) drift, no conformality verdict.
    """
    backend = spec.backend
    if not hasattr(backend, "cx"):
        raise ModulusError("conformality_scan needs a subdivision-rule system")
    cx = backend.cx
    v0 = annulus_center_vertex if annulus_center_vertex is not None else 0
    levels = levels if levels is not None else range(2, 5)
    out = []
    for n in levels:
        problem = _tile_annulus(cx, v0, n)
        mi, ms = mod_pair(problem, tol)
        out.append({"level": n, "mod_inf": mi, "mod_sup": ms})
    return out


def _tile_annulus(cx, v0: int, n: int) -> AnnulusProblem:
    """Ring of level-n tiles around base vertex v0: the annulus between the
    tiles at v0 and everything at graph distance > 2 in the tile adjacency."""
    cx.ensure_level(n)
    level = cx.levels[n]
    at_v = set(level.vert_faces[v0])

    def tile_neighbors(fs: set[int]) -> set[int]:
        out = set()
        for f in fs:
            for v in level.faces[f]:
                out.update(level.vert_faces[v])
        return out

    ring1 = tile_neighbors(at_v) - at_v
    ring2 = tile_neighbors(at_v | ring1) - at_v - ring1
    annulus = sorted(ring1 | ring2)
    idx = {f: f"t{f}" for f in annulus}
    ids = [idx[f] for f in annulus]
    nerve = set()
    edge_nerve = set()
    ann = set(annulus)
    for f in annulus:
        for v in level.faces[f]:
            for gtile in level.vert_faces[v]:
                if gtile in ann and gtile != f:
                    nerve.add(frozenset((idx[f], idx[gtile])))
        for e in level.face_edge_ids(f):
            for gtile in level.edge_faces[e]:
                if gtile in ann and gtile != f:
                    edge_nerve.add(frozenset((idx[f], idx[gtile])))
    inner = {idx[f] for f in ring1}
    outer = {idx[f] for f in ring2}
    sh = Shingling(ids, nerve)
    # slit: a shortest inner-to-outer path in the EDGE adjacency (separating
    # cycles use the same stricter nerve, which keeps the cut pinch-free),
    # flanks split via the rotation order around each slit tile
    edge_sh = Shingling(ids, edge_nerve)
    prob0 = AnnulusProblem(edge_sh, inner=inner, outer=outer,
                           slit=sorted(inner)[:1], slit_sides={})
    hit = _shortest_transversal(prob0, {s: 1.0 for s in ids})
    if hit is None:
        raise NoChainError("no transversal chain in the tile annulus")
    chain = _path_from_chain(edge_sh.neighbors(), hit[1], inner, outer)
    sides = _sides_from_links(level, chain, at_v, ann, idx,
                              edge_only=True)
    return AnnulusProblem(sh, inner=inner, outer=outer, slit=chain,
                          slit_sides=sides, separating_nerve=edge_nerve)


def _path_from_chain(nbmap, chain: frozenset, inner: set[str], outer: set[str]
                     ) -> list[str]:
    start = sorted(chain & inner)[0]
    path = [start]
    seen = {start}
    while path[-1] not in outer:
        nxt = [v for v in nbmap[path[-1]] if v in chain and v not in seen]
        if not nxt:
            raise ModulusError("could not linearize the slit chain")
        path.append(nxt[0])
        seen.add(nxt[0])
    return path


def _sides_from_links(level, slit: list[str], hole: set[int], annulus: set[int],
                      idx: dict[int, str], edge_only: bool = False
                      ) -> dict[str, dict[str, set[str]]]:
    """Sides of the slit from the face links of the oriented complex.

    For each slit tile, its cyclic neighbor order is cut at the predecessor
    block (the hole for the first tile) and the successor block (the outside
    for the last); the two arcs are the left and right flanks and the face
    orientation keeps the labels consistent along the path.
    """
    name_of = idx
    face_of = {v: k for k, v in idx.items()}
    slit_faces = [face_of[s] for s in slit]
    slit_set = set(slit_faces)
    sides: dict[str, dict[str, set[str]]] = {}
    for i, f in enumerate(slit_faces):
        link = level.face_link(f)
        edge_nb = set()
        for e in level.face_edge_ids(f):
            edge_nb.update(t for t in level.edge_faces[e] if t != f)
        if i > 0:
            entry = {slit_faces[i - 1]}
        else:
            entry = {t for t in link if t in hole}
        if i + 1 < len(slit_faces):
            exit_ = {slit_faces[i + 1]}
        else:
            exit_ = {t for t in link if t not in annulus and t not in hole}
        if not entry or not exit_:
            raise ModulusError("slit tile lacks an entry or exit block")
        m = len(link)
        left: set[str] = set()
        right: set[str] = set()
        j = next(k for k in range(m) if link[k] in entry)
        # walk the cycle once starting just past the entry block
        state = "left"
        for step in range(1, m):
            t = link[(j + step) % m]
            if t in entry:
                state = "left"
                continue
            if t in exit_:
                state = "right"
                continue
            if t in slit_set or t not in annulus:
                continue
            if edge_only and t not in edge_nb:
                continue
            (left if state == "left" else right).add(name_of[t])
        sides[name_of[f]] = {"left": left, "right": right}
    return sides
