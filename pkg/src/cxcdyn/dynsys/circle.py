"""Exact circle backend: x -> d*x mod 1 with a cover by open rational arcs.

Arcs are stored as integer numerator pairs over a common denominator, so
every intersection/containment query is integer arithmetic.  An arc
(lo, hi, den) is the open set {x : lo/den < x < hi/den} mod 1, canonicalized
to 0 <= lo < den and 0 < hi - lo < den.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import gcd

from .types import (
    CellAddress,
    CoverElement,
    PreimageRule,
    RuleComponent,
    SystemSpec,
    SystemError,
    sorted_addresses,
)


def _lcm(a: int, b: int) -> int:
    return a // gcd(a, b) * b


def _scaled(x: Fraction, den: int) -> int:
    if den % x.denominator:
        raise ValueError("denominator mismatch")
    return x.numerator * (den // x.denominator)


@dataclass(frozen=True)
class Arc:
    lo: int
    hi: int
    den: int

    def __post_init__(self):
        if not (0 <= self.lo < self.den and self.lo < self.hi < self.lo + self.den):
            raise ValueError(f"arc not canonical: {self}")

    @property
    def length(self) -> Fraction:
        return Fraction(self.hi - self.lo, self.den)

    def as_fractions(self) -> tuple[Fraction, Fraction]:
        return Fraction(self.lo, self.den), Fraction(self.hi, self.den)


def make_arc(lo: Fraction, hi: Fraction) -> Arc:
    """Canonical Arc for the open interval (lo, hi) mod 1, 0 < hi - lo < 1."""
    length = hi - lo
    if length <= 0 or length >= 1:
        raise SystemError(f"arc ({lo},{hi}) must have length in (0,1)")
    lo = lo - (lo // 1)
    den = _lcm(lo.denominator, length.denominator)
    lo_n = _scaled(lo, den)
    return Arc(lo_n, lo_n + _scaled(length, den), den)


def _common(a: Arc, b: Arc) -> tuple[int, int, int, int, int]:
    den = _lcm(a.den, b.den)
    return (den, a.lo * (den // a.den), a.hi * (den // a.den),
            b.lo * (den // b.den), b.hi * (den // b.den))


def arcs_overlap(a: Arc, b: Arc) -> bool:
    """Exact open-interval overlap test mod 1."""
    den, alo, ahi, blo, bhi = _common(a, b)
    for shift in (-den, 0, den):
        if max(alo, blo + shift) < min(ahi, bhi + shift):
            return True
    return False


def overlap_components(a: Arc, b: Arc) -> list[tuple[Fraction, Fraction]]:
    """Connected components of a ∩ b, as intervals in a's representative frame."""
    den, alo, ahi, blo, bhi = _common(a, b)
    out = []
    for shift in (-den, 0, den):
        lo = max(alo, blo + shift)
        hi = min(ahi, bhi + shift)
        if lo < hi:
            out.append((Fraction(lo, den), Fraction(hi, den)))
    return out


def arc_contains_point(a: Arc, x: Fraction) -> bool:
    den = _lcm(a.den, x.denominator)
    num = _scaled(x, den) % den
    alo, ahi = a.lo * (den // a.den), a.hi * (den // a.den)
    return alo < num < ahi or alo < num + den < ahi


def arc_contains_arc(outer: Arc, inner: Arc) -> bool:
    den, olo, ohi, ilo, ihi = _common(outer, inner)
    for shift in (-den, 0, den):
        if olo <= ilo + shift and ihi + shift <= ohi:
            return True
    return False


class CircleBackend:
    """Query engine for x -> d*x mod 1 with a fixed level-0 arc cover."""

    def __init__(self, degree: int, base_arcs: dict[str, Arc]):
        self.degree = degree
        self.base_arcs = base_arcs
        self._order = sorted(base_arcs)

    def arc_of(self, addr: CellAddress) -> Arc:
        # the j-th preimage component of (lo,hi)/den is (lo+j*den, hi+j*den)/(d*den)
        arc = self.base_arcs[addr.root]
        lo, hi, den = arc.lo, arc.hi, arc.den
        for j in addr.word:
            lo, hi, den = lo + j * den, hi + j * den, den * self.degree
            if lo >= den:
                lo, hi = lo - den, hi - den
        return Arc(lo, hi, den)

    def preimage_components(self, addr: CellAddress) -> list[tuple[CellAddress, int]]:
        return [(addr.child(j), 1) for j in range(self.degree)]

    def intersects(self, a: CellAddress, b: CellAddress) -> bool:
        if a == b:
            return True
        return arcs_overlap(self.arc_of(a), self.arc_of(b))

    def enumerate_level(self, n: int) -> list[CellAddress]:
        out = [CellAddress(r) for r in self._order]
        for _ in range(n - 1):
            out = [a.child(j) for a in out for j in range(self.degree)]
        return sorted_addresses(out)

    def overlapping_pairs(self, addrs_a, addrs_b) -> set[tuple[CellAddress, CellAddress]]:
        """All unordered overlapping pairs between two address lists (a != b).

        Line sweep on the unrolled circle: each arc contributes two copies
        shifted by one period, so mod-1 overlaps become plain overlaps.
        """
        arcs = [(addr, self.arc_of(addr), src)
                for src, lst in ((0, addrs_a), (1, addrs_b)) for addr in lst]
        if not arcs:
            return set()
        den = 1
        for _, arc, _ in arcs:
            den = _lcm(den, arc.den)
        intervals = []
        for addr, arc, src in arcs:
            lo = arc.lo * (den // arc.den)
            hi = arc.hi * (den // arc.den)
            intervals.append((lo, hi, src, addr))
            intervals.append((lo + den, hi + den, src, addr))
        intervals.sort(key=lambda t: (t[0], t[1]))
        pairs: set[tuple[CellAddress, CellAddress]] = set()
        n = len(intervals)
        for i in range(n):
            lo_i, hi_i, src_i, a_i = intervals[i]
            j = i + 1
            while j < n and intervals[j][0] < hi_i:
                lo_j, hi_j, src_j, a_j = intervals[j]
                if src_i != src_j and a_i != a_j:
                    pairs.add((a_i, a_j) if src_i == 0 else (a_j, a_i))
                j += 1
        return pairs

    def containing_addresses(self, point: Fraction, n: int) -> list[CellAddress]:
        """All level-n addresses whose arcs contain the point.

        Level-n arcs over root (lo, hi, den) are ((lo + m*den), (hi + m*den))
        over den*d^(n-1) mod 1, with m encoding the address word in base-d
        little-endian digits; the containing m form an integer interval.
        """
        d = self.degree
        D = d ** (n - 1)
        point = point - (point // 1)
        out = []
        for root in self._order:
            arc = self.base_arcs[root]
            lo, hi, den = arc.lo, arc.hi, arc.den
            scaled = point * den * D  # (x + c)*den*D for c = 0, 1 covers all shifts
            for c in (0, 1):
                val = scaled + c * den * D
                m_lo = (val - hi) / den
                m_hi = (val - lo) / den
                m = m_lo.__floor__() + 1  # strictly above m_lo
                while m < m_hi:
                    if 0 <= m < D:
                        word, mm = [], m
                        for _ in range(n - 1):
                            word.append(mm % d)
                            mm //= d
                        out.append(CellAddress(root, tuple(word)))
                    m += 1
        return sorted_addresses(set(out))

    def address_chain(self, point: Fraction, depth: int) -> list[CellAddress]:
        """One descending chain of addresses whose arcs all contain ``point``."""
        chain = []
        for n in range(1, depth + 1):
            hits = self.containing_addresses(point, n)
            if not hits:
                raise SystemError(f"point {point} not covered at level {n}")
            chain.append(hits[0])
        return chain

    def periodic_points(self, n: int) -> list[tuple[Fraction, int]]:
        """Fixed points of the n-th iterate with local multiplicities (all 1)."""
        q = self.degree ** n - 1
        return [(Fraction(j, q), 1) for j in range(q)]


def circle_system(degree: int, arcs: int, overlap: Fraction | None = None) -> SystemSpec:
    """Cover of the circle by ``arcs`` evenly spaced open rational arcs.

    Each arc is (i/N - o, (i+1)/N + o) with overlap margin o, so consecutive
    arcs meet while non-consecutive ones stay disjoint.
    """
    if degree < 2:
        raise SystemError("degree must be >= 2")
    if arcs < 2:
        raise SystemError("need at least 2 arcs")
    if overlap is None:
        overlap = Fraction(1, 4 * arcs)
    if overlap <= 0 or overlap >= Fraction(1, 2 * arcs):
        raise SystemError("overlap must lie in (0, 1/(2*arcs))")
    names = [f"A{i}" for i in range(arcs)]
    base: dict[str, Arc] = {}
    elements = []
    for i, name in enumerate(names):
        arc = make_arc(Fraction(i, arcs) - overlap, Fraction(i + 1, arcs) + overlap)
        base[name] = arc
        elements.append(CoverElement(id=name, arc=arc.as_fractions()))
    _check_cover(base)
    rules = {
        name: PreimageRule(
            image_id=name,
            components=tuple(RuleComponent(index=j, degree=1) for j in range(degree)),
        )
        for name in names
    }
    return SystemSpec(
        degree=degree,
        elements=elements,
        rules=rules,
        tokens=[],
        backend_name="geometric-circle",
        backend=CircleBackend(degree, base),
        name=f"circle:d={degree},arcs={arcs}",
    )


def _check_cover(base: dict[str, Arc]) -> None:
    """The union of the open arcs must be the whole circle."""
    den = 1
    for arc in base.values():
        den = _lcm(den, arc.den)
    scaled = [(arc.lo * (den // arc.den), arc.hi * (den // arc.den))
              for arc in base.values()]
    for k in range(den):
        # unit cell (k, k+1) and lattice point k must each be interior to an arc
        cell_hit = any(lo <= k and k + 1 <= hi or lo <= k + den and k + den + 1 <= hi
                       for lo, hi in scaled)
        point_hit = any(lo < k < hi or lo < k + den < hi for lo, hi in scaled)
        if not (cell_hit and point_hit):
            raise SystemError("arcs do not cover the circle (uncovered repellor)")
