"""Empirical verifiers for the expansion/irreducibility/degree axioms and the
metric-regularity estimates (roundness, diameter distortion, local
comparability, doubling).

Verdicts are finite-depth: PASS carries fitted constants or a witness level,
FAIL carries a witness, INCONCLUSIVE means the built depth did not settle
the question.  Nothing here claims anything about the infinite system.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynsys.circle import Arc, arc_contains_arc, arc_contains_point
from .dynsys.types import CellAddress, SystemError, SystemSpec
from .gamma import GammaGraph
from .hypmetric import MetricParams, dijkstra, shadow, shadow_diameter


@dataclass
class RoundnessReport:
    entries: list[dict] = field(default_factory=list)
    K: float = 1.0


def _level_max_diameters(spec: SystemSpec, g: GammaGraph, p: MetricParams,
                         max_level: int | None = None) -> list[float]:
    backend = spec.backend
    top = g.depth if max_level is None else min(max_level, g.depth)
    out = []
    if hasattr(backend, "tile_diameters"):
        # subdivision backends gauge the mesh by the tiles themselves; the
        # cover elements are stars of boundedly many tiles with the same rate
        top_cx = backend.cover_level + g.depth - 1
        return [max(backend.tile_diameters(lvl)) for lvl in range(1, top_cx + 1)]
    for n in range(1, top + 1):
        if hasattr(backend, "arc_of"):
            diam = max(float(backend.arc_of(g.vertex(i).address).length)
                       for i in g.spheres[n])
        else:
            # abstract backend: visual diameters of shadows stand in for size
            diam = max(shadow_diameter(g, p, shadow(g, i)) for i in g.spheres[n])
        out.append(diam)
    return out


def check_expansion(spec: SystemSpec, g: GammaGraph, p: MetricParams,
                    max_level: int | None = None) -> dict:
    """Mesh decay: PASS iff the per-level max diameters strictly decrease.

    The geometric rate theta is fitted on the top half of the levels (the
    shallow levels only see the prefactor), and C' makes diam_n <= C' theta^n
    hold over the whole sequence.
    """
    diams = _level_max_diameters(spec, g, p, max_level)
    decreasing = all(b < a for a, b in zip(diams, diams[1:]))
    tail = max(2, len(diams) // 2)
    xs = np.arange(len(diams) - tail + 1, len(diams) + 1, dtype=float)
    ys = np.log(np.array(diams[-tail:]))
    slope = float(np.polyfit(xs, ys, 1)[0])
    theta = math.exp(slope)
    c_prime = max(d / theta ** (n + 1) for n, d in enumerate(diams))
    verdict = "PASS" if (decreasing and theta < 1.0) else "FAIL"
    return {
        "axiom": "Expansion",
        "verdict": verdict,
        "max_diameters": diams,
        "theta": theta,
        "C_prime": c_prime,
    }


def check_irreducibility(spec: SystemSpec, g: GammaGraph) -> dict:
    """Sufficient spreading check: preimage components of each level-0 element
    must, by some level, trace back (through vertical adjacency chains) to
    every level-0 element."""
    if g.depth < 2:
        raise ValueError("needs depth >= 2")
    roots = {g.vertex(i).address.root for i in g.spheres[1]}
    up_reach: dict[int, set[str]] = {
        i: {g.vertex(i).address.root} for i in g.spheres[1]
    }
    witness: dict[str, int | None] = {r: None for r in roots}
    covered: dict[str, set[str]] = {r: set() for r in roots}
    for n in range(2, g.depth + 1):
        for i in g.spheres[n]:
            reach: set[str] = set()
            for j in g.adjacency[i]:
                if g.level(j) == n - 1:
                    reach |= up_reach[j]
            up_reach[i] = reach
        for i in g.spheres[n]:
            root = g.vertex(i).address.root
            covered[root] |= up_reach[i]
        for r in roots:
            if witness[r] is None and covered[r] == roots:
                witness[r] = n - 1  # n-1 pullbacks spread the element everywhere
        for i in g.spheres[n - 1]:
            del up_reach[i]
        covered = {r: set() for r in roots}
    if all(w is not None for w in witness.values()):
        return {"axiom": "Irreducibility", "verdict": "PASS",
                "witness_level": max(witness.values())}
    return {"axiom": "Irreducibility", "verdict": "INCONCLUSIVE",
            "witness_level": None,
            "pending": sorted(r for r, w in witness.items() if w is None)}


def check_degree(g: GammaGraph) -> dict:
    """PASS with the max multiplicity p iff per-level maxima stabilize over
    the last half of the built levels; otherwise GROWING with the tail ratio."""
    if g.depth < 3:
        raise ValueError("needs depth >= 3")
    maxima = [max(g.vertex(i).degree for i in g.spheres[n])
              for n in range(1, g.depth + 1)]
    window = maxima[-((g.depth + 1) // 2):]
    if len(set(window)) == 1:
        return {"axiom": "Degree", "verdict": "PASS", "p": window[0],
                "level_maxima": maxima}
    ratio = window[-1] / window[0]
    return {"axiom": "Degree", "verdict": "GROWING",
            "growth_ratio": ratio ** (1.0 / (len(window) - 1)),
            "level_maxima": maxima,
            "doubling_advisory": "unbounded multiplicities; expect doubling failure"}


# --- geometric roundness on the circle ----------------------------------

def _circle_roundness(arc: Arc, x: Fraction) -> Fraction:
    lo, hi = arc.as_fractions()
    # place x inside the representative interval
    while x <= lo:
        x += 1
    if not lo < x < hi:
        raise ValueError("basepoint outside arc")
    left, right = x - lo, hi - x
    big, small = max(left, right), min(left, right)
    out = min(big, Fraction(1, 2))   # circle distances cap at 1/2
    inr = min(small, Fraction(1, 2))
    return out / inr


def _grid_points_in_arc(arc: Arc, grid: int) -> list[Fraction]:
    pts = []
    for k in range(grid):
        x = Fraction(k, grid)
        if arc_contains_point(arc, x):
            pts.append(x)
    return pts


def roundness_distortion(spec: SystemSpec, g: GammaGraph, grid: int = 16,
                         max_level: int | None = None) -> RoundnessReport:
    """Sampled roundness over all elements, plus monotone envelopes of matched
    pullback pairs (element, basepoint) -> (image, image basepoint)."""
    backend = spec.backend
    if not hasattr(backend, "arc_of"):
        raise SystemError("roundness_distortion requires the geometric-circle backend")
    top = g.depth if max_level is None else min(max_level, g.depth)
    report = RoundnessReport()
    scatter = []
    for n in range(1, top + 1):
        denom = grid * spec.degree ** (n - 1)
        for i in g.spheres[n]:
            addr = g.vertex(i).address
            arc = backend.arc_of(addr)
            for x in _grid_points_in_arc(arc, denom):
                r = _circle_roundness(arc, x)
                entry = {"vertex": i, "level": n, "base": x, "round": float(r)}
                report.entries.append(entry)
                if n >= 2:
                    img = addr.parent()
                    fx = (x * spec.degree) - ((x * spec.degree) // 1)
                    img_arc = backend.arc_of(img)
                    if arc_contains_point(img_arc, fx):
                        scatter.append((float(_circle_roundness(img_arc, fx)), float(r)))
    report.K = max(e["round"] for e in report.entries)
    scatter.sort()
    env = []
    running = 0.0
    for img_round, src_round in scatter:
        running = max(running, src_round)
        env.append((img_round, running))
    report.envelope_backward = env  # type: ignore[attr-defined]
    return report


def diameter_distortion(spec: SystemSpec, g: GammaGraph,
                        max_pairs_per_level: int = 200) -> dict:
    """Scatter of relative diameters of nested pairs against their pullbacks."""
    backend = spec.backend
    circle = hasattr(backend, "arc_of")
    fsr = hasattr(backend, "contains")
    if not (circle or fsr):
        raise SystemError("diameter_distortion needs a geometric realization")

    def diam(addr: CellAddress) -> float:
        if circle:
            return float(backend.arc_of(addr).length)
        return backend.element_diameter(addr)

    def contains(outer: CellAddress, inner: CellAddress) -> bool:
        if circle:
            return arc_contains_arc(backend.arc_of(outer), backend.arc_of(inner))
        return backend.contains(outer, inner)

    scatter = []
    for n in range(1, g.depth - 1):
        found = 0
        for i in g.spheres[n + 1]:
            inner = g.vertex(i).address
            outer = inner.parent()
            # matched pullback pair: (inner, outer) vs their one-step images
            if not inner.word or not outer.word:
                continue
            if contains(outer, inner) and contains(outer.parent(), inner.parent()):
                r_up = diam(inner.parent()) / diam(outer.parent())
                r_dn = diam(inner) / diam(outer)
                scatter.append({"level": n, "image_ratio": r_up, "ratio": r_dn})
                found += 1
                if found >= max_pairs_per_level:
                    break
    pts = sorted((s["image_ratio"], s["ratio"]) for s in scatter)
    env_minus, running = [], 0.0
    for x, y in pts:
        running = max(running, y)
        env_minus.append((x, running))
    return {"pairs": scatter, "envelope_backward": env_minus}


def local_comparability(spec: SystemSpec, g: GammaGraph) -> dict:
    """Geometric diameter ratios across every vertical edge; returns the
    smallest C with all ratios inside (1/C, C)."""
    backend = spec.backend
    if hasattr(backend, "arc_of"):
        def diam(addr):
            return float(backend.arc_of(addr).length)
    elif hasattr(backend, "element_diameter"):
        diam = backend.element_diameter
    else:
        raise SystemError("local comparability needs a geometric realization")
    worst = 1.0
    ratios = []
    for u, v in g.edges():
        lu, lv = g.level(u), g.level(v)
        if lu < 1 or lv < 1 or lu == lv:
            continue
        r = diam(g.vertex(v).address) / diam(g.vertex(u).address)
        if lu > lv:
            r = 1.0 / r
        ratios.append(r)
        worst = max(worst, r, 1.0 / r)
    return {"C": worst, "count": len(ratios),
            "min_ratio": min(ratios), "max_ratio": max(ratios)}


def doubling_probe(g: GammaGraph, p: MetricParams, levels: list[int] | None = None,
                   centers_per_level: int = 4, radius_scale: float = 0.3) -> dict:
    """Covering numbers of sampled metric balls by half-radius balls.

    Balls live at the boundary-distance scale e^{-eps n}/eps of their level;
    close to the truncation depth they get clipped, which only lowers the
    counts, so an observed growth trend is genuine.  Centers are the
    highest-multiplicity vertices of each sampled level (ties by index), so
    unbounded branching shows up as growth along the level axis.
    """
    eps = p.epsilon
    levels = levels or list(range(2, g.depth - 1))
    per_level = []
    for n in levels:
        vs = sorted(g.spheres[n], key=lambda i: (-g.vertex(i).degree, i))
        r = radius_scale * math.exp(-eps * n) / eps
        counts = []
        for c in vs[:centers_per_level]:
            dist_c = dijkstra(g, p, c, None)
            ball = [v for v in range(len(g.vertices)) if dist_c[v] < r]
            uncovered = set(ball)
            count = 0
            while uncovered:
                v = min(uncovered)
                dv = dijkstra(g, p, v, set(uncovered))
                uncovered = {w for w in uncovered if dv[w] >= r / 2.0}
                count += 1
            counts.append(count)
        per_level.append({"level": n, "radius": r, "max_cover": max(counts),
                          "counts": counts})
    maxima = [row["max_cover"] for row in per_level]
    return {
        "levels": levels,
        "per_level": per_level,
        "max_ratio": max(maxima) / max(1, min(maxima)),
        "growing": all(b >= a for a, b in zip(maxima, maxima[1:])) and maxima[-1] > maxima[0],
    }


def axiom_report(spec: SystemSpec, g: GammaGraph, p: MetricParams) -> dict:
    """The three axiom verdicts bundled with the regularity estimates."""
    out = {
        "expansion": check_expansion(spec, g, p),
        "irreducibility": check_irreducibility(spec, g),
        "degree": check_degree(g),
    }
    try:
        out["local_comparability"] = local_comparability(spec, g)
    except SystemError:
        out["local_comparability"] = {"verdict": "UNSUPPORTED"}
    return out
