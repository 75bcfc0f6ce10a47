"""Canonical measures on the graph boundary, built at finite depth.

The construction follows the Patterson-Sullivan recipe: weight each level-n
vertex by e^{-ns} d(W) and normalize by the series value, then pass to the
level-N slice (exact rational masses d(W)/(d^{N-1}|S(1)|)) as the finite
stand-in for the limit measure.  Shadow masses, preimage/periodic-point
equidistribution and the entropy/dimension bounds are all reported against
that slice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .dynsys.types import CellAddress, SystemError
from .gamma import GammaGraph, sphere_degree_sum
from .hypmetric import MetricParams, ShadowSet, shadow


@dataclass
class AtomicMeasure:
    """Finitely supported measure on graph vertices; masses Fraction or float."""

    atoms: dict[int, Fraction | float]
    level_tag: int | None = None

    def total_mass(self):
        return sum(self.atoms.values())

    def is_probability(self, tol: float = 1e-12) -> bool:
        return abs(float(self.total_mass()) - 1.0) <= tol

    def mass_on(self, vertices: set[int]):
        return sum(m for v, m in self.atoms.items() if v in vertices)

    def restrict(self, vertices: set[int]) -> "AtomicMeasure":
        return AtomicMeasure({v: m for v, m in self.atoms.items() if v in vertices},
                             self.level_tag)


@dataclass
class EntropyReport:
    v_estimate: float
    lower_bound: float
    upper: float
    dimension_bounds: tuple[float, float]
    alpha: float
    levels_used: list[int] = field(default_factory=list)
    sphere_sizes: list[int] = field(default_factory=list)


def poincare_series(g: GammaGraph, s: float, terms: int = 60,
                    check_tol: float = 1e-10) -> float:
    """Value of the degree-weighted series |S(1)| * sum d^{n-1} e^{-ns}.

    Uses the closed form |S(1)|/(e^s - d); a truncated direct sum must agree
    to ``check_tol``.
    """
    d = g.spec.degree
    s1 = len(g.spheres[1])
    if s <= math.log(d):
        raise SystemError(f"series diverges for s <= log d = {math.log(d):.6f}")
    closed = s1 / (math.exp(s) - d)
    partial = s1 * sum(d ** (n - 1) * math.exp(-n * s) for n in range(1, terms + 1))
    tail = s1 * d ** terms * math.exp(-(terms + 1) * s) / (1.0 - d * math.exp(-s))
    if abs(partial + tail - closed) > check_tol * max(1.0, closed):
        raise AssertionError("truncated series disagrees with the closed form")
    return closed


def poincare_partial_sum(degree: int, s1: int, s: float, terms: int) -> float:
    return s1 * sum(degree ** (n - 1) * math.exp(-n * s) for n in range(1, terms + 1))


def mu_s(g: GammaGraph, s: float) -> tuple[AtomicMeasure, float]:
    """The normalized series measure restricted to the built depth, plus the
    tail mass beyond it (so atoms + tail = 1)."""
    d = g.spec.degree
    if s <= math.log(d):
        raise SystemError("mu_s needs s > log d")
    P = poincare_series(g, s)
    atoms: dict[int, float] = {}
    for n in range(1, g.depth + 1):
        w = math.exp(-n * s) / P
        for i in g.spheres[n]:
            atoms[i] = w * g.vertex(i).degree
    s1 = len(g.spheres[1])
    tail = s1 * d ** g.depth * math.exp(-(g.depth + 1) * s) / (1.0 - d * math.exp(-s)) / P
    return AtomicMeasure(atoms), tail


def mu_f_proxy(g: GammaGraph, N: int | None = None) -> AtomicMeasure:
    """Level-N slice of the canonical measure: mass d(W) / (d^{N-1}|S(1)|)."""
    N = g.depth if N is None else N
    if not 1 <= N <= g.depth:
        raise ValueError("N out of built range")
    d = g.spec.degree
    denom = d ** (N - 1) * len(g.spheres[1])
    atoms = {i: Fraction(g.vertex(i).degree, denom) for i in g.spheres[N]}
    m = AtomicMeasure(atoms, level_tag=N)
    if m.total_mass() != 1:
        raise AssertionError("slice masses do not sum to one exactly")
    return m


def push_forward(g: GammaGraph, m: AtomicMeasure) -> AtomicMeasure:
    atoms: dict[int, Fraction | float] = {}
    for v, mass in m.atoms.items():
        w = g.F[v]
        atoms[w] = atoms.get(w, 0) + mass
    tag = None if m.level_tag is None else max(m.level_tag - 1, 0)
    return AtomicMeasure(atoms, tag)


def preimage_measure(g: GammaGraph, xi: int, n: int) -> AtomicMeasure:
    """Normalized n-fold pullback of the point mass at xi."""
    lvl = g.level(xi)
    if lvl < 1:
        raise ValueError("xi must have level >= 1")
    if lvl + n > g.depth:
        raise ValueError("depth exceeded")
    d = g.spec.degree
    atoms: dict[int, Fraction] = {xi: Fraction(1)}
    from .gamma import preimages_of

    for _ in range(n):
        nxt: dict[int, Fraction] = {}
        for v, mass in atoms.items():
            for w, dF in preimages_of(g, v):
                nxt[w] = nxt.get(w, Fraction(0)) + mass * Fraction(dF, d)
        atoms = nxt
    m = AtomicMeasure(atoms, level_tag=lvl + n)
    if m.total_mass() != 1:
        raise AssertionError("preimage measure mass is not exactly one")
    return m


def periodic_measure(g: GammaGraph, n: int, N: int | None = None) -> AtomicMeasure:
    """Measure of period-n points, weighted 1/d^n, at their depth-N addresses.

    Needs a backend exposing periodic-point enumeration; the total mass is
    reported as-is (these need not be probability measures).
    """
    backend = g.spec.backend
    N = g.depth if N is None else N
    if hasattr(backend, "periodic_points"):
        points = backend.periodic_points(n)
        d = g.spec.degree
        atoms: dict[int, Fraction] = {}
        for x, mult in points:
            addr = backend.containing_addresses(x, N)[0]
            v = g.index_of[addr]
            atoms[v] = atoms.get(v, Fraction(0)) + Fraction(mult, d ** n)
        return AtomicMeasure(atoms, level_tag=N)
    if g.spec.backend_name == "substitution" and _is_fullshift(g.spec):
        d = g.spec.degree
        atoms = {}
        for word in _periodic_words(d, n):
            addr = _cylinder_address(g.spec, (word * ((N // n) + 1))[:N])
            v = g.index_of[addr]
            atoms[v] = atoms.get(v, Fraction(0)) + Fraction(1, d ** n)
        return AtomicMeasure(atoms, level_tag=N)
    raise SystemError("backend does not enumerate periodic points")


def _is_fullshift(spec) -> bool:
    return spec.name.startswith("fullshift")


def _periodic_words(d: int, n: int):
    def rec(prefix):
        if len(prefix) == n:
            yield tuple(prefix)
            return
        for j in range(d):
            yield from rec(prefix + [j])

    yield from rec([])


def _cylinder_address(spec, word: tuple[int, ...]) -> CellAddress:
    # cylinder (w_1..w_N) has root C_{w_N} and address word (w_{N-1},...,w_1)
    root = f"C{word[-1]}"
    return CellAddress(root, tuple(reversed(word[:-1])))


def periodic_point_shadow_mass(g: GammaGraph, n: int, sh: ShadowSet,
                               N: int | None = None) -> Fraction:
    """Exact mass that period-n points assign to a shadow.

    Membership uses the full test (some depth-N element containing the point
    lies in the shadow) rather than a single representative address.
    """
    backend = g.spec.backend
    if not hasattr(backend, "periodic_points"):
        raise SystemError("needs a point-enumerating backend")
    N = g.depth if N is None else N
    members = sh.at_level(N)
    d = g.spec.degree
    total = Fraction(0)
    for x, mult in backend.periodic_points(n):
        addrs = backend.containing_addresses(x, N)
        if any(g.index_of[a] in members for a in addrs):
            total += Fraction(mult, d ** n)
    return total


def shadow_lemma_ratios(g: GammaGraph, p: MetricParams, N: int | None = None,
                        min_level: int = 2, max_level: int | None = None) -> dict:
    """Shadow masses against the predicted d(W) e^{-alpha eps |W|}.

    alpha = (1/eps) log d, so the prediction is d(W) d^{-|W|}; the report
    carries the min/max ratio over all vertices in the level window.
    """
    N = g.depth if N is None else N
    max_level = N - 2 if max_level is None else max_level
    if min_level < 1 or max_level > N:
        raise ValueError("level window out of range")
    d = g.spec.degree
    proxy = mu_f_proxy(g, N)
    alpha = math.log(d) / p.epsilon
    rows = []
    for lvl in range(min_level, max_level + 1):
        for w in g.spheres[lvl]:
            sh = shadow(g, w)
            mass = proxy.mass_on(sh.at_level(N))
            predicted = Fraction(g.vertex(w).degree, d ** lvl)
            rows.append({"vertex": w, "level": lvl,
                         "ratio": float(mass / predicted)})
    ratios = [r["ratio"] for r in rows]
    return {
        "alpha": alpha,
        "N": N,
        "min_ratio": min(ratios),
        "max_ratio": max(ratios),
        "count": len(rows),
        "rows": rows,
    }


def entropy_report(g: GammaGraph, p: MetricParams) -> EntropyReport:
    """Growth-rate estimate of log|S(n)| plus entropy and dimension bounds."""
    if g.depth < 5:
        raise ValueError("entropy_report needs depth >= 5")
    d = g.spec.degree
    levels = list(range((g.depth + 1) // 2, g.depth + 1))
    sizes = [len(g.spheres[n]) for n in levels]
    xs = np.array(levels, dtype=float)
    ys = np.log(np.array(sizes, dtype=float))
    slope = float(np.polyfit(xs, ys, 1)[0])
    proxy = mu_f_proxy(g, g.depth)
    integral = sum(float(mass) * math.log(g.vertex(v).last_degree)
                   for v, mass in proxy.atoms.items())
    lower = math.log(d) - integral
    alpha = math.log(d) / p.epsilon
    return EntropyReport(
        v_estimate=slope,
        lower_bound=lower,
        upper=math.log(d),
        dimension_bounds=(lower / p.epsilon, slope / p.epsilon),
        alpha=alpha,
        levels_used=levels,
        sphere_sizes=sizes,
    )


def degree_identity_holds(g: GammaGraph) -> bool:
    d = g.spec.degree
    s1 = len(g.spheres[1])
    return all(sphere_degree_sum(g, n + 1) == d ** n * s1 for n in range(g.depth))
