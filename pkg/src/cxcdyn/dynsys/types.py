"""Core types for finite combinatorial descriptions of expanding covering systems.

A system is a degree-d branched self-covering presented through a finite
level-0 cover: cover elements, one preimage rule per element, and contact
tokens that witness (and propagate) intersections.  Geometry, when present,
lives in the backend object; everything here is backend-agnostic bookkeeping.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Optional, Sequence


class SystemError(Exception):
    """Raised when a system description violates its invariants."""


class BudgetError(Exception):
    """Raised when an enumeration would exceed the configured size budget."""


@dataclass(frozen=True, order=True)
class CellAddress:
    """Symbolic address of a cover-pullback element.

    ``root`` names a level-0 cover element; ``word`` lists component indices
    taken at each pullback step.  A level-n vertex carries a word of length
    n-1 (level 1 is the bare root).
    """

    root: str
    word: tuple[int, ...] = ()

    @property
    def level(self) -> int:
        return 1 + len(self.word)

    def parent(self) -> "CellAddress":
        if not self.word:
            raise ValueError("level-1 address has no parent")
        return CellAddress(self.root, self.word[:-1])

    def child(self, index: int) -> "CellAddress":
        return CellAddress(self.root, self.word + (index,))

    def __repr__(self) -> str:
        return f"{self.root}[{','.join(map(str, self.word))}]"


@dataclass(frozen=True)
class CoverElement:
    id: str
    arc: Optional[tuple[Fraction, Fraction]] = None  # geometric-circle realization
    tile: Optional[int] = None                       # fsr star-cover seed tile
    incident_tokens: frozenset[str] = frozenset()


@dataclass(frozen=True)
class RuleComponent:
    index: int
    degree: int
    element: Optional[str] = None  # self-similar type; defaults to the image element


@dataclass(frozen=True)
class PreimageRule:
    image_id: str
    components: tuple[RuleComponent, ...]


@dataclass(frozen=True)
class TokenLift:
    """One preimage of a token's marked point.

    ``first``/``second`` are component indices on the token's pair, ``child``
    names the token type describing the lifted configuration (defaults to the
    token itself for self-similar overlaps).
    """

    first: int
    second: int
    multiplicity: int = 1
    child: Optional[str] = None


@dataclass(frozen=True)
class ContactToken:
    id: str
    pair: tuple[str, str]
    lifts: tuple[TokenLift, ...]
    kind: str = "horizontal"        # horizontal | vertical | abstract
    component: Optional[int] = None  # vertical tokens: component index on pair[1]


@dataclass
class SystemSpec:
    """Validated finite description of a degree-d expanding covering system."""

    degree: int
    elements: list[CoverElement]
    rules: dict[str, PreimageRule]
    tokens: list[ContactToken]
    backend_name: str
    backend: object = field(repr=False, default=None)
    name: str = ""

    def __post_init__(self):
        self.validate()

    def element_ids(self) -> list[str]:
        return [e.id for e in self.elements]

    def rule_for(self, element_id: str) -> PreimageRule:
        try:
            return self.rules[element_id]
        except KeyError:
            raise SystemError(f"no preimage rule for element {element_id!r}")

    def type_of(self, addr: CellAddress) -> str:
        """Element id whose rule governs the next pullback step under ``addr``."""
        current = addr.root
        for letter in addr.word:
            rule = self.rule_for(current)
            if letter < 0 or letter >= len(rule.components):
                raise SystemError(f"invalid component index {letter} in {addr!r}")
            comp = rule.components[letter]
            current = comp.element if comp.element is not None else current
        return current

    def cumulative_degree(self, addr: CellAddress) -> int:
        """deg of the (level-1)-fold covering of the root by this element."""
        d, current = 1, addr.root
        for letter in addr.word:
            rule = self.rule_for(current)
            comp = rule.components[letter]
            d *= comp.degree
            current = comp.element if comp.element is not None else current
        return d

    def last_step_degree(self, addr: CellAddress) -> int:
        """Local multiplicity of one application of the dynamics on this element."""
        if not addr.word:
            return 1
        parent_type = self.type_of(addr.parent())
        return self.rule_for(parent_type).components[addr.word[-1]].degree

    def validate(self) -> None:
        ids = [e.id for e in self.elements]
        if len(set(ids)) != len(ids):
            raise SystemError("duplicate cover element ids")
        if self.degree < 2:
            raise SystemError(f"system degree must be >= 2, got {self.degree}")
        known = set(ids)
        for e in self.elements:
            if e.id not in self.rules:
                raise SystemError(f"element {e.id!r} has no preimage rule")
        for eid, rule in self.rules.items():
            if eid not in known:
                raise SystemError(f"rule for unknown element {eid!r}")
            total = sum(c.degree for c in rule.components)
            if total != self.degree:
                raise SystemError(
                    f"local degrees for {eid!r} sum to {total}, expected {self.degree}"
                )
            for c in rule.components:
                if c.degree < 1:
                    raise SystemError(f"non-positive local degree on {eid!r}")
                if c.element is not None and c.element not in known:
                    raise SystemError(f"component of {eid!r} typed by unknown element")
            if [c.index for c in rule.components] != list(range(len(rule.components))):
                raise SystemError(f"components of {eid!r} not indexed 0..k-1")
        token_ids = set()
        for t in self.tokens:
            if t.id in token_ids:
                raise SystemError(f"duplicate token id {t.id!r}")
            token_ids.add(t.id)
        by_id = {t.id: t for t in self.tokens}
        for t in self.tokens:
            if t.kind not in ("horizontal", "vertical", "abstract"):
                raise SystemError(f"token {t.id!r} has unknown kind {t.kind!r}")
            if t.kind != "abstract":
                for x in t.pair:
                    if x not in known:
                        raise SystemError(f"token {t.id!r} names unknown element")
            total = sum(l.multiplicity for l in t.lifts)
            if total != self.degree:
                raise SystemError(
                    f"token {t.id!r}: lift multiplicities sum to {total}, expected {self.degree}"
                )
            for l in t.lifts:
                if l.child is not None and l.child not in by_id:
                    raise SystemError(f"token {t.id!r} lift references unknown child token")


# --- the four operations (thin dispatchers over the backend) ----------------

def preimage_components(spec: SystemSpec, addr: CellAddress) -> list[tuple[CellAddress, int]]:
    """Children of ``addr`` in the pullback tree with their local degrees."""
    return spec.backend.preimage_components(addr)


def intersects(spec: SystemSpec, a: CellAddress, b: CellAddress) -> bool:
    """Whether two cover-pullback elements meet on the repellor.

    Exact for each backend on its domain; only defined for level gap <= 1.
    """
    if abs(a.level - b.level) > 1:
        raise SystemError(f"level gap {abs(a.level - b.level)} > 1 in intersects")
    if a.level <= b.level:
        return spec.backend.intersects(a, b)
    return spec.backend.intersects(b, a)


def enumerate_level(spec: SystemSpec, n: int, budget: int = 2_000_000) -> list[CellAddress]:
    """All level-n addresses in lexicographic (root, word) order."""
    if n < 1:
        raise SystemError(f"enumerate_level needs n >= 1, got {n}")
    s1 = len(spec.elements)
    if s1 * spec.degree ** (n - 1) > budget:
        raise BudgetError(
            f"level {n} may hold up to {s1 * spec.degree ** (n - 1)} elements, "
            f"budget is {budget}"
        )
    return spec.backend.enumerate_level(n)


def sorted_addresses(addrs: Iterable[CellAddress]) -> list[CellAddress]:
    return sorted(addrs, key=lambda a: (a.root, a.word))
