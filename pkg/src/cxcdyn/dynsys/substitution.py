"""Abstract substitution backend: intersections decided by a token-lift automaton.

A token marks a point of the repellor lying in the overlap of an (ordered)
pair of elements.  Its lifts list the d preimages of that point, each tagged
with the component indices it falls into on both sides and with the token
type describing the lifted configuration.  Horizontal tokens seed
same-level overlaps at level 1, vertical tokens seed level-(1,2) overlaps;
both propagate downward by following lifts, so any intersection query with
level gap <= 1 reduces to finitely many seed lookups.
"""

from __future__ import annotations

from fractions import Fraction

from .circle import Arc, overlap_components, _lcm
from .types import (
    CellAddress,
    ContactToken,
    CoverElement,
    PreimageRule,
    RuleComponent,
    SystemSpec,
    SystemError,
    TokenLift,
    sorted_addresses,
)


class SubstitutionBackend:
    def __init__(self, degree: int, element_order: list[str],
                 rules: dict[str, PreimageRule], tokens: list[ContactToken]):
        self.degree = degree
        self._order = sorted(element_order)
        self.rules = rules
        self.tokens = {t.id: t for t in tokens}
        # seed indexes: ordered pair -> witness token ids
        self._h_seeds: dict[tuple[str, str], list[str]] = {}
        self._v_seeds: dict[tuple[str, str, int], list[str]] = {}
        for t in tokens:
            if t.kind == "horizontal":
                a, b = t.pair
                self._h_seeds.setdefault((a, b), []).append(t.id)
                if a != b:
                    self._h_seeds.setdefault((b, a), []).append("~" + t.id)
            elif t.kind == "vertical":
                self._v_seeds.setdefault((t.pair[0], t.pair[1], t.component), []).append(t.id)
        self._memo_h: dict[tuple[CellAddress, CellAddress], frozenset[str]] = {}
        self._memo_v: dict[tuple[CellAddress, CellAddress], frozenset[str]] = {}

    # witness ids may carry a "~" prefix meaning the token's pair is used swapped
    def _lift_matches(self, wid: str, i: int, j: int) -> frozenset[str]:
        swapped = wid.startswith("~")
        tok = self.tokens[wid[1:] if swapped else wid]
        out = set()
        for lift in tok.lifts:
            fi, se = (lift.second, lift.first) if swapped else (lift.first, lift.second)
            if fi == i and se == j:
                child = lift.child if lift.child is not None else tok.id
                out.add("~" + child if swapped else child)
        return frozenset(out)

    def _h_witnesses(self, a: CellAddress, b: CellAddress) -> frozenset[str]:
        """Witness token ids for a horizontal (same-level, a != b) pair."""
        key = (a, b)
        hit = self._memo_h.get(key)
        if hit is not None:
            return hit
        if a.level == 1:
            out = frozenset(self._h_seeds.get((a.root, b.root), ()))
        else:
            pa, pb = a.parent(), b.parent()
            i, j = a.word[-1], b.word[-1]
            if pa == pb:
                # distinct children of one element: only declared self-pair tokens apply
                out_set = set()
                for wid in self._h_witnesses_self(pa):
                    out_set |= self._lift_matches(wid, i, j)
                    out_set |= self._lift_matches(wid, j, i)
                out = frozenset(out_set)
            else:
                parents = self._h_witnesses(pa, pb)
                out_set = set()
                for wid in parents:
                    out_set |= self._lift_matches(wid, i, j)
                out = frozenset(out_set)
        self._memo_h[key] = out
        return out

    def _h_witnesses_self(self, a: CellAddress) -> frozenset[str]:
        """Self-pair tokens valid on (a, a); needed for siblings at the next level."""
        if a.level == 1:
            return frozenset(self._h_seeds.get((a.root, a.root), ()))
        parents = self._h_witnesses_self(a.parent())
        i = a.word[-1]
        out: set[str] = set()
        for wid in parents:
            out |= self._lift_matches(wid, i, i)
        return frozenset(out)

    def _v_witnesses(self, a: CellAddress, b: CellAddress) -> frozenset[str]:
        """Witness token ids for a vertical pair (level(b) = level(a) + 1)."""
        key = (a, b)
        hit = self._memo_v.get(key)
        if hit is not None:
            return hit
        if a.level == 1:
            out = frozenset(self._v_seeds.get((a.root, b.root, b.word[0]), ()))
        else:
            parents = self._v_witnesses(a.parent(), b.parent())
            i, j = a.word[-1], b.word[-1]
            out_set = set()
            for wid in parents:
                out_set |= self._lift_matches(wid, i, j)
            out = frozenset(out_set)
        self._memo_v[key] = out
        return out

    def intersects(self, a: CellAddress, b: CellAddress) -> bool:
        # callers guarantee level(a) <= level(b) <= level(a) + 1
        if a == b:
            return True
        if a.level == b.level:
            return bool(self._h_witnesses(a, b))
        return bool(self._v_witnesses(a, b))

    def preimage_components(self, addr: CellAddress) -> list[tuple[CellAddress, int]]:
        rule = self.rules[self._type_of(addr)]
        return [(addr.child(c.index), c.degree) for c in rule.components]

    def _type_of(self, addr: CellAddress) -> str:
        current = addr.root
        for letter in addr.word:
            comp = self.rules[current].components[letter]
            current = comp.element if comp.element is not None else current
        return current

    def enumerate_level(self, n: int) -> list[CellAddress]:
        out = [CellAddress(r) for r in self._order]
        for _ in range(n - 1):
            nxt = []
            for a in out:
                rule = self.rules[self._type_of(a)]
                nxt.extend(a.child(c.index) for c in rule.components)
            out = nxt
        return sorted_addresses(out)

    def overlapping_pairs(self, addrs_a, addrs_b):
        pairs = set()
        for a in addrs_a:
            for b in addrs_b:
                if a == b:
                    continue
                lo, hi = (a, b) if a.level <= b.level else (b, a)
                if self.intersects(lo, hi):
                    pairs.add((a, b))
        return pairs


def fullshift_system(degree: int) -> SystemSpec:
    """One-sided full shift on d symbols, covered by the length-1 cylinders.

    Level-n elements are the length-n cylinders; component j of a cylinder
    prepends the symbol j.  No horizontal tokens (cylinders of equal length
    are disjoint); vertical tokens encode the prefix relation.
    """
    if degree < 2:
        raise SystemError("degree must be >= 2")
    names = [f"C{i}" for i in range(degree)]
    elements = [CoverElement(id=n) for n in names]
    rules = {
        names[i]: PreimageRule(
            image_id=names[i],
            components=tuple(
                RuleComponent(index=j, degree=1, element=names[j]) for j in range(degree)
            ),
        )
        for i in range(degree)
    }
    diag = ContactToken(
        id="Tdiag",
        pair=(names[0], names[0]),
        kind="abstract",
        lifts=tuple(TokenLift(k, k, 1, "Tdiag") for k in range(degree)),
    )
    tokens = [diag]
    # cylinder [i] meets [i j] = (root C_j, component i): seed per (i, j)
    for i in range(degree):
        for j in range(degree):
            tokens.append(ContactToken(
                id=f"V{i}_{j}",
                pair=(names[i], names[j]),
                kind="vertical",
                component=i,
                lifts=tuple(TokenLift(k, k, 1, "Tdiag") for k in range(degree)),
            ))
    return SystemSpec(
        degree=degree,
        elements=elements,
        rules=rules,
        tokens=tokens,
        backend_name="substitution",
        backend=SubstitutionBackend(degree, names, rules, tokens),
        name=f"fullshift:d={degree}",
    )


# --- substitution encoding of a geometric circle system ---------------------
#
# For x -> d*x the overlap combinatorics are universal: a marked point at
# in-arc position p with wraparound bit t (its canonical representative is
# lo + p - t) lands, at branch k of the preimage, in component (k - t) mod d
# with new bit [k < t].  Only the bit pair matters, so four abstract token
# types close the automaton; per-pair seeds just record their initial bits.

def _universal_types(degree: int) -> list[ContactToken]:
    out = []
    for ta in (0, 1):
        for tb in (0, 1):
            lifts = []
            for k in range(degree):
                ca = (k - ta) % degree
                cb = (k - tb) % degree
                child = f"T{int(k < ta)}{int(k < tb)}"
                lifts.append(TokenLift(ca, cb, 1, child))
            out.append(ContactToken(
                id=f"T{ta}{tb}", pair=("", ""), kind="abstract", lifts=tuple(lifts),
            ))
    return out


def _wrap_bit(arc: Arc, x: Fraction) -> int:
    """1 when the canonical representative of x sits below the arc's lo."""
    den = _lcm(arc.den, x.denominator)
    num = (x.numerator * (den // x.denominator)) % den
    lo = arc.lo * (den // arc.den)
    hi = arc.hi * (den // arc.den)
    if lo < num < hi:
        return 0
    if lo < num + den < hi:
        return 1
    raise SystemError(f"marked point {x} outside arc {arc}")


def circle_substitution_system(degree: int, arcs: int,
                               overlap: Fraction | None = None) -> SystemSpec:
    """Token-automaton encoding of ``circle_system(degree, arcs, overlap)``."""
    from .circle import circle_system

    geo = circle_system(degree, arcs, overlap)
    cb = geo.backend
    names = [e.id for e in geo.elements]
    elements = [CoverElement(id=n) for n in names]
    rules = {
        n: PreimageRule(
            image_id=n,
            components=tuple(RuleComponent(index=j, degree=1) for j in range(degree)),
        )
        for n in names
    }
    tokens = _universal_types(degree)

    def midpoint(lo: Fraction, hi: Fraction) -> Fraction:
        return (lo + hi) / 2

    # horizontal seeds: one per overlap component of each unordered level-1 pair
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            arc_a, arc_b = cb.base_arcs[a], cb.base_arcs[b]
            for k, (lo, hi) in enumerate(overlap_components(arc_a, arc_b)):
                x = midpoint(lo, hi)
                ta, tb = _wrap_bit(arc_a, x), _wrap_bit(arc_b, x)
                tokens.append(ContactToken(
                    id=f"H_{a}_{b}_{k}", pair=(a, b), kind="horizontal",
                    lifts=tuple(
                        TokenLift((j - ta) % degree, (j - tb) % degree, 1,
                                  f"T{int(j < ta)}{int(j < tb)}")
                        for j in range(degree)
                    ),
                ))
    # vertical seeds: level-1 element vs level-2 component
    for a in names:
        arc_a = cb.base_arcs[a]
        for b in names:
            for comp in range(degree):
                arc_c = cb.arc_of(CellAddress(b, (comp,)))
                for k, (lo, hi) in enumerate(overlap_components(arc_a, arc_c)):
                    x = midpoint(lo, hi)
                    ta, tc = _wrap_bit(arc_a, x), _wrap_bit(arc_c, x)
                    tokens.append(ContactToken(
                        id=f"V_{a}_{b}.{comp}_{k}", pair=(a, b), kind="vertical",
                        component=comp,
                        lifts=tuple(
                            TokenLift((j - ta) % degree, (j - tc) % degree, 1,
                                      f"T{int(j < ta)}{int(j < tc)}")
                            for j in range(degree)
                        ),
                    ))
    return SystemSpec(
        degree=degree,
        elements=elements,
        rules=rules,
        tokens=tokens,
        backend_name="substitution",
        backend=SubstitutionBackend(degree, names, rules, tokens),
        name=f"circlesubst:d={degree},arcs={arcs}",
    )
