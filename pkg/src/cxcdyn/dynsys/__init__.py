from .types import (
    BudgetError,
    CellAddress,
    ContactToken,
    CoverElement,
    PreimageRule,
    RuleComponent,
    SystemError,
    SystemSpec,
    TokenLift,
    enumerate_level,
    intersects,
    preimage_components,
)
from .circle import Arc, arc_contains_arc, arc_contains_point, arcs_overlap, circle_system, make_arc
from .substitution import circle_substitution_system, fullshift_system
from .fsr import fsr_system
from .loader import load_system

__all__ = [
    "Arc",
    "BudgetError",
    "CellAddress",
    "ContactToken",
    "CoverElement",
    "PreimageRule",
    "RuleComponent",
    "SystemError",
    "SystemSpec",
    "TokenLift",
    "arc_contains_arc",
    "arc_contains_point",
    "arcs_overlap",
    "circle_substitution_system",
    "circle_system",
    "enumerate_level",
    "fsr_system",
    "fullshift_system",
    "intersects",
    "load_system",
    "make_arc",
    "preimage_components",
]
