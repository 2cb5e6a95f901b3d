"""Seeded random program generator.

Produces parse-valid, geometrically valid, executable programs on the
quantization grid, shaped the way the token encoder expects (declaration,
loops, extrude per sketch, consecutive names).  Profiles are star polygons
with optional arc edges and an optional circular hole; rejection sampling
keeps only candidates that pass the full geometry checks.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import CadkitError
from ..quant import dequant, step
from .nodes import (
    Arc,
    Circle,
    Command,
    Extent,
    ExtrudeParams,
    Line,
    LoopStart,
    Operation,
    Program,
    SketchDecl,
)
from .printer import serialize


def _polygon_commands(rng: np.random.Generator):
    """Star polygon on the grid as a command list, or None to retry."""
    n_v = int(rng.integers(3, 7))
    cx = int(rng.integers(100, 156))
    cy = int(rng.integers(100, 156))
    angles = np.sort(rng.uniform(0.0, 2.0 * math.pi, size=n_v))
    gaps = np.diff(np.concatenate([angles, [angles[0] + 2.0 * math.pi]]))
    if gaps.min() < 0.45:
        return None
    verts = []
    for a in angles:
        r = int(rng.integers(30, 86))
        x = int(round(cx + r * math.cos(a)))
        y = int(round(cy + r * math.sin(a)))
        verts.append((max(5, min(250, x)), max(5, min(250, y))))
    if len({v for v in verts}) != n_v:
        return None
    use_arcs = rng.random() < 0.45
    cmds = []
    for i in range(n_v):
        endpoint = verts[(i + 1) % n_v]
        if use_arcs and i % 2 == 0 and rng.random() < 0.6:
            cmds.append(
                Arc(
                    endpoint=endpoint,
                    sweep=int(rng.integers(40, 130)),
                    ccw=bool(rng.integers(0, 2)),
                )
            )
        else:
            cmds.append(Line(endpoint=endpoint))
    return cmds


def _circle_command(rng: np.random.Generator):
    return Circle(
        center=(int(rng.integers(95, 161)), int(rng.integers(95, 161))),
        radius=int(rng.integers(35, 90)),
    )


def _sketch_loops(rng: np.random.Generator):
    """Command lists for one sketch: outer loop, maybe a circular hole."""
    from ..geom.sketch import (
        DegenerateLoopError,
        SelfIntersectionError,
        profile_from_commands,
        signed_distance,
    )

    for _ in range(60):
        if rng.random() < 0.25:
            outer = [_circle_command(rng)]
        else:
            outer = _polygon_commands(rng)
            if outer is None:
                continue
        try:
            profile = profile_from_commands([outer])
        except (DegenerateLoopError, SelfIntersectionError):
            continue
        loops = [outer]
        if rng.random() < 0.3:
            hc = (int(rng.integers(105, 151)), int(rng.integers(105, 151)))
            hr = int(rng.integers(10, 32))
            center = np.array(
                [[dequant("coord", hc[0]), dequant("coord", hc[1])]]
            )
            margin = 6.0 * step("coord")
            if signed_distance(profile, center)[0] > dequant("radius", hr) + margin:
                hole = [Circle(center=hc, radius=hr)]
                try:
                    profile_from_commands([outer, hole])
                    loops.append(hole)
                except (DegenerateLoopError, SelfIntersectionError):
                    pass
        return loops
    raise CadkitError("loop generation failed to converge")


_AXIS_LEVELS = (0, 64, 127, 128, 191, 255)


def _extrude(rng: np.random.Generator, sketch: str, first: bool) -> ExtrudeParams:
    if rng.random() < 0.6:
        orientation = tuple(int(rng.choice(_AXIS_LEVELS)) for _ in range(3))
    else:
        orientation = tuple(int(rng.integers(0, 256)) for _ in range(3))
    if first:
        op = Operation.NEW_BODY
    else:
        op = rng.choice(
            [Operation.JOIN, Operation.CUT, Operation.INTERSECT],
            p=[0.72, 0.23, 0.05],
        )
    extent = rng.choice(
        [Extent.ONE_SIDED, Extent.SYMMETRIC, Extent.TWO_SIDED],
        p=[0.7, 0.2, 0.1],
    )
    return ExtrudeParams(
        sketch=sketch,
        orientation=orientation,
        origin=tuple(int(rng.integers(95, 161)) for _ in range(3)),
        scale=int(rng.integers(40, 121)),
        distances=(int(rng.integers(150, 244)), int(rng.integers(150, 244))),
        operation=op,
        extent=extent,
    )


def _candidate(rng: np.random.Generator) -> Program:
    weights = [0.5, 0.35, 0.15]
    n_sketches = int(rng.choice([1, 2, 3], p=weights))
    statements = []
    for k in range(n_sketches):
        name = f"sketch_{k}"
        statements.append(SketchDecl(name))
        for loop in _sketch_loops(rng):
            statements.append(LoopStart(name))
            statements.extend(Command(name, g) for g in loop)
        statements.append(_extrude(rng, name, first=k == 0))
    return Program(tuple(statements))


def generate_program(seed: int) -> Program:
    """One valid, executable program, deterministic per seed."""
    return generate_programs(1, seed, dedupe=False)[0]


def generate_programs(n: int, seed: int, dedupe: bool = True) -> list[Program]:
    """n valid, executable programs; identical (n, seed) gives identical output."""
    from .validate import validate
    from ..geom.solid import EmptyResultError, execute

    rng = np.random.Generator(np.random.PCG64(seed))
    out: list[Program] = []
    seen: set[str] = set()
    attempts = 0
    limit = 300 * max(n, 1)
    while len(out) < n:
        attempts += 1
        if attempts > limit:
            raise CadkitError("program generation failed to converge")
        try:
            program = _candidate(rng)
        except CadkitError:
            continue
        if validate(program):
            continue
        try:
            execute(program)
        except (EmptyResultError, CadkitError):
            continue
        if dedupe:
            key = serialize(program)
            if key in seen:
                continue
            seen.add(key)
        out.append(program)
    return out
