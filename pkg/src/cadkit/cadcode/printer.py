"""Canonical pretty-printer for Programs.

The format is frozen: one statement per line, LF separators, a trailing LF on
non-empty programs, fixed keyword order, single space after commas.  Round-trip
tests depend on these bytes never changing.
"""

from __future__ import annotations

from .nodes import (
    Arc,
    Circle,
    Command,
    ExtrudeParams,
    Line,
    LoopStart,
    Program,
    SketchDecl,
    Statement,
)


def _fmt(st: Statement) -> str:
    if isinstance(st, SketchDecl):
        return f"{st.name} = []"
    if isinstance(st, LoopStart):
        return f"{st.sketch}.new_loop()"
    if isinstance(st, Command):
        g = st.geom
        if isinstance(g, Line):
            return f"{st.sketch}.Line(endpoint=({g.endpoint[0]}, {g.endpoint[1]}))"
        if isinstance(g, Arc):
            return (
                f"{st.sketch}.Arc(endpoint=({g.endpoint[0]}, {g.endpoint[1]}), "
                f"sweep={g.sweep}, ccw={g.ccw})"
            )
        if isinstance(g, Circle):
            return (
                f"{st.sketch}.Circle(center=({g.center[0]}, {g.center[1]}), "
                f"radius={g.radius})"
            )
    if isinstance(st, ExtrudeParams):
        t, p, gm = st.orientation
        x, y, z = st.origin
        e1, e2 = st.distances
        return (
            f"Extrude(sketch={st.sketch}, orientation=({t}, {p}, {gm}), "
            f"origin=({x}, {y}, {z}), scale={st.scale}, distances=({e1}, {e2}), "
            f'operation="{st.operation.value}", extent="{st.extent.value}")'
        )
    raise TypeError(f"not a statement: {st!r}")


def serialize(program: Program) -> str:
    """Deterministic canonical text for a Program; "" for the empty Program."""
    lines = [_fmt(st) for st in program.statements]
    if not lines:
        return ""
    return "\n".join(lines) + "\n"


def statement_text(st: Statement) -> str:
    """Canonical text of a single statement, without the newline."""
    return _fmt(st)
