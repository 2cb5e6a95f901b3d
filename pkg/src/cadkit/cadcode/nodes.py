"""AST node types for the CAD-code DSL.

A Program is a flat statement tuple; loop membership is positional, the same
way the text reads: commands append to the most recently opened loop of their
sketch.  All nodes are frozen so Programs are hashable and safe to share.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from ..errors import CadkitError


class Operation(Enum):
    NEW_BODY = "NewBody"
    JOIN = "Join"
    CUT = "Cut"
    INTERSECT = "Intersect"


class Extent(Enum):
    ONE_SIDED = "OneSided"
    SYMMETRIC = "Symmetric"
    TWO_SIDED = "TwoSided"


@dataclass(frozen=True)
class Line:
    endpoint: tuple[int, int]


@dataclass(frozen=True)
class Arc:
    endpoint: tuple[int, int]
    sweep: int
    ccw: bool


@dataclass(frozen=True)
class Circle:
    center: tuple[int, int]
    radius: int


GeomCommand = Line | Arc | Circle


@dataclass(frozen=True)
class SketchDecl:
    name: str


@dataclass(frozen=True)
class LoopStart:
    sketch: str


@dataclass(frozen=True)
class Command:
    sketch: str
    geom: GeomCommand


@dataclass(frozen=True)
class ExtrudeParams:
    sketch: str
    orientation: tuple[int, int, int]  # theta, phi, gamma levels
    origin: tuple[int, int, int]
    scale: int
    distances: tuple[int, int]         # e1, e2 levels (signed "distance" range)
    operation: Operation
    extent: Extent


Statement = SketchDecl | LoopStart | Command | ExtrudeParams


@dataclass(frozen=True)
class Program:
    statements: tuple[Statement, ...] = ()
    # Byte spans (start, end) of each statement in the source this Program was
    # parsed from.  compare=False: structural equality must not depend on the
    # formatting of whatever text the Program came from.
    spans: tuple[tuple[int, int], ...] | None = field(default=None, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "statements", tuple(self.statements))
        if self.spans is not None:
            object.__setattr__(self, "spans", tuple(tuple(s) for s in self.spans))

    def __len__(self):
        return len(self.statements)


@dataclass(frozen=True)
class Diagnostic:
    severity: str            # "error" | "warning"
    code: str                # stable identifier, e.g. "syntax-error"
    span: tuple[int, int]    # byte offsets [start, end) into the source
    message: str


class ParseError(CadkitError):
    """Source text had errors; carries the full diagnostic list."""

    def __init__(self, diagnostics):
        self.diagnostics = tuple(diagnostics)
        head = "; ".join(
            f"{d.code}@{d.span[0]}: {d.message}" for d in self.diagnostics[:3]
        )
        extra = len(self.diagnostics) - 3
        if extra > 0:
            head += f" (+{extra} more)"
        super().__init__(head or "parse failed")


def sketch_groups(program: Program) -> dict[str, dict]:
    """Collect per-sketch structure: loops (lists of GeomCommand), extrude.

    Returns an insertion-ordered dict name -> {"loops": [[GeomCommand, ...]],
    "extrude": ExtrudeParams | None}.  Assumes the program passed parse-level
    checks; unknown orderings raise KeyError naturally.
    """
    groups: dict[str, dict] = {}
    for st in program.statements:
        if isinstance(st, SketchDecl):
            groups[st.name] = {"loops": [], "extrude": None}
        elif isinstance(st, LoopStart):
            groups[st.sketch]["loops"].append([])
        elif isinstance(st, Command):
            groups[st.sketch]["loops"][-1].append(st.geom)
        elif isinstance(st, ExtrudeParams):
            groups[st.sketch]["extrude"] = st
    return groups
