"""Loading systems from builtin descriptors or JSON files.

JSON schema (all rationals as "p/q" strings):
  degree     int >= 2
  backend    "geometric-circle" | "substitution"
  elements   [{"id": str, "arc": ["p/q", "r/s"]?}]
  rules      {image_id: [{"index": int, "degree": int, "element": id?}]}
  tokens     [{"id": str, "pair": [id, id], "kind"?: str, "component"?: int,
               "lifts": [[i, j, mult] | [i, j, mult, child_id]]}]

Builtins: "circle:d=<d>,arcs=<N>[,overlap=<p/q>]", "circlesubst:...",
"fullshift:d=<d>", "barycentric", "pillow", "fsr:<path>".
"""

from __future__ import annotations

import json
from fractions import Fraction
from pathlib import Path

from .circle import CircleBackend, circle_system, make_arc
from .fsr import fsr_system
from .substitution import SubstitutionBackend, circle_substitution_system, fullshift_system
from .types import (
    ContactToken,
    CoverElement,
    PreimageRule,
    RuleComponent,
    SystemSpec,
    SystemError,
    TokenLift,
)


def _parse_fraction(s) -> Fraction:
    if isinstance(s, int):
        return Fraction(s)
    if isinstance(s, str):
        return Fraction(s)
    raise SystemError(f"expected rational 'p/q', got {s!r}")


def _parse_builtin(desc: str) -> SystemSpec:
    head, _, rest = desc.partition(":")
    params = {}
    if rest and head in ("circle", "circlesubst", "fullshift"):
        for item in rest.split(","):
            k, _, v = item.partition("=")
            if not v:
                raise SystemError(f"malformed builtin parameter {item!r}")
            params[k] = v
    if head == "circle" or head == "circlesubst":
        d = int(params.get("d", "2"))
        arcs = int(params.get("arcs", "4"))
        overlap = _parse_fraction(params["overlap"]) if "overlap" in params else None
        maker = circle_system if head == "circle" else circle_substitution_system
        return maker(d, arcs, overlap)
    if head == "fullshift":
        return fullshift_system(int(params.get("d", "2")))
    if head in ("barycentric", "pillow"):
        return fsr_system(head)
    if head == "fsr":
        path = Path(rest)
        if not path.exists():
            raise SystemError(f"fsr rule file not found: {rest}")
        data = json.loads(path.read_text())
        kind = data.get("kind")
        if kind not in ("barycentric", "pillow"):
            raise SystemError(
                f"fsr files support kind 'barycentric' or 'pillow', got {kind!r}")
        return fsr_system(kind)
    raise SystemError(f"unknown builtin descriptor {desc!r}")


def _load_json(data: dict) -> SystemSpec:
    try:
        degree = int(data["degree"])
        backend_name = data.get("backend", "geometric-circle")
        raw_elements = data["elements"]
        raw_rules = data["rules"]
    except KeyError as e:
        raise SystemError(f"missing top-level key {e.args[0]!r}")
    elements = []
    arcs = {}
    for el in raw_elements:
        eid = el["id"]
        arc = None
        if "arc" in el:
            lo, hi = (_parse_fraction(x) for x in el["arc"])
            arcs[eid] = make_arc(lo, hi)
            arc = arcs[eid].as_fractions()
        elements.append(CoverElement(id=eid, arc=arc))
    rules = {}
    for eid, comps in raw_rules.items():
        rules[eid] = PreimageRule(
            image_id=eid,
            components=tuple(
                RuleComponent(index=int(c["index"]), degree=int(c["degree"]),
                              element=c.get("element"))
                for c in sorted(comps, key=lambda c: int(c["index"]))
            ),
        )
    tokens = []
    for t in data.get("tokens", ()):
        lifts = []
        for lift in t["lifts"]:
            if len(lift) == 3:
                i, j, m = lift
                child = None
            else:
                i, j, m, child = lift
            lifts.append(TokenLift(int(i), int(j), int(m), child))
        tokens.append(ContactToken(
            id=t["id"],
            pair=tuple(t["pair"]),
            kind=t.get("kind", "horizontal"),
            component=t.get("component"),
            lifts=tuple(lifts),
        ))
    if backend_name == "geometric-circle":
        missing = [e.id for e in elements if e.id not in arcs]
        if missing:
            raise SystemError(f"geometric-circle elements lack arcs: {missing}")
        from .circle import _check_cover

        _check_cover(arcs)
        backend = CircleBackend(degree, arcs)
    elif backend_name == "substitution":
        backend = SubstitutionBackend(degree, [e.id for e in elements], rules, tokens)
    else:
        raise SystemError(f"JSON backend {backend_name!r} not supported")
    return SystemSpec(degree=degree, elements=elements, rules=rules, tokens=tokens,
                      backend_name=backend_name, backend=backend, name="json")


def load_system(source: str | Path | dict) -> SystemSpec:
    """Load a system from a builtin descriptor, a JSON file path, or a dict."""
    if isinstance(source, dict):
        return _load_json(source)
    text = str(source)
    if text.startswith("builtin:"):
        return _parse_builtin(text[len("builtin:"):])
    head = text.split(":", 1)[0]
    if head in ("circle", "circlesubst", "fullshift", "barycentric", "pillow", "fsr"):
        return _parse_builtin(text)
    path = Path(text)
    if not path.exists():
        raise SystemError(f"no such system file or builtin: {text}")
    return _load_json(json.loads(path.read_text()))
