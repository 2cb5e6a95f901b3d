"""Geometric validation of parsed programs.

parse() guarantees structure; validate() answers whether geom can execute the
program: loops have positive measure, nothing self-intersects, extrusions have
nonzero extent and scale, and at least one Extrude exists.  Findings come back
as diagnostics with spans into the canonical serialization.
"""

from __future__ import annotations

from .nodes import Diagnostic, ExtrudeParams, LoopStart, Program, sketch_groups
from .parser import diagnose
from .printer import serialize
from ..quant import dequant


def _loop_start_spans(program: Program, spans):
    """(sketch name, loop index) -> span of the new_loop statement."""
    counts: dict[str, int] = {}
    out = {}
    for st, span in zip(program.statements, spans):
        if isinstance(st, LoopStart):
            idx = counts.get(st.sketch, 0)
            counts[st.sketch] = idx + 1
            out[(st.sketch, idx)] = span
    return out


def validate(program: Program) -> list[Diagnostic]:
    """Empty list iff geom.execute can evaluate every profile and extrusion.

    Boolean emptiness of the composed solid (a Cut removing everything) is a
    whole-model property and surfaces at execute() as EmptyResultError, not
    here.
    """
    from ..geom import sketch as gsk  # deferred: geometry is heavier than parsing

    text = serialize(program)
    reparsed, diags = diagnose(text)
    if diags:
        return list(diags)
    spans = reparsed.spans
    whole = (0, max(len(text), 1))
    loop_spans = _loop_start_spans(reparsed, spans)
    ext_spans = {
        st.sketch: span
        for st, span in zip(reparsed.statements, spans)
        if isinstance(st, ExtrudeParams)
    }

    out: list[Diagnostic] = []
    groups = sketch_groups(reparsed)
    for name, group in groups.items():
        try:
            gsk.evaluate_sketch(reparsed, name)
        except gsk.SelfIntersectionError as e:
            code = "crossing-loops" if e.between_loops else "self-intersection"
            span = loop_spans.get((name, e.loop_index), whole)
            out.append(Diagnostic("error", code, span, str(e)))
        except gsk.DegenerateLoopError as e:
            span = loop_spans.get((name, e.loop_index), whole)
            out.append(Diagnostic("error", "degenerate-profile", span, str(e)))
        except gsk.OpenLoopError as e:
            span = loop_spans.get((name, e.loop_index), whole)
            out.append(Diagnostic("error", "open-loop", span, str(e)))

        ext = group["extrude"]
        if ext is None:
            continue
        span = ext_spans.get(name, whole)
        if dequant("scale", ext.scale) < 1e-12:
            out.append(
                Diagnostic(
                    "error", "zero-scale", span,
                    f"sketch {name}: extrusion scale level {ext.scale} de-quantizes to 0",
                )
            )
        e1 = dequant("distance", ext.distances[0])
        e2 = dequant("distance", ext.distances[1])
        from ..geom.solid import extent_interval

        z0, z1 = extent_interval(ext.extent, e1, e2)
        if z1 - z0 < 1e-12:
            out.append(
                Diagnostic(
                    "error", "zero-extent", span,
                    f"sketch {name}: extrusion z-interval has zero length",
                )
            )

    if not any(g["extrude"] is not None for g in groups.values()):
        out.append(
            Diagnostic("error", "no-extrude", whole, "program never extrudes")
        )
    return out
