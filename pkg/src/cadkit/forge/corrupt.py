"""Completion masking and invertible error injection.

Corruption edits come in two kinds: permuting the command order inside a
loop, and bumping one quantized parameter by a visible offset. Both are
recorded in an EditLog whose inverse restores the original program exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from ..cadcode.nodes import (
    Arc,
    Circle,
    Command,
    ExtrudeParams,
    Extent,
    Line,
    LoopStart,
    Program,
)
from ..cadcode.validate import validate
from ..errors import CadkitError
from ..geom.solid import EmptyResultError, execute


class TooShortError(CadkitError):
    pass


class NoEligibleEditError(CadkitError):
    pass


# --- completion masking ---------------------------------------------------

def mask_for_completion(program: Program, keep_fraction: float | None = None,
                        seed: int | None = None):
    """Split a program into (prefix, full) at a statement boundary.

    keep_fraction defaults to a uniform draw in [0.3, 0.5] from seed. The cut
    index is floor(keep_fraction * n), bumped forward when it would leave a
    new_loop() as the last kept statement, so a loop declaration is never
    separated from its first command.
    """
    stmts = list(program.statements)
    n = len(stmts)
    if n < 2:
        raise TooShortError(f"need at least 2 statements, got {n}")
    if keep_fraction is None:
        rng = np.random.default_rng(0 if seed is None else seed)
        keep_fraction = float(rng.uniform(0.3, 0.5))
    if not 0.0 < keep_fraction < 1.0:
        raise ValueError(f"keep_fraction must be in (0, 1), got {keep_fraction}")
    cut = math.floor(keep_fraction * n)
    if cut < 1:
        raise TooShortError(
            f"keep_fraction {keep_fraction} keeps no statements of {n}")
    while cut < n and isinstance(stmts[cut - 1], LoopStart):
        cut += 1
    if cut >= n:
        raise TooShortError("nothing left to mask after the cut")
    return Program(tuple(stmts[:cut])), Program(tuple(stmts))


# --- edit log --------------------------------------------------------------

@dataclass(frozen=True)
class PermuteLoop:
    sketch: str
    loop_index: int
    permutation: tuple[int, ...]   # new[i] = old[permutation[i]]

    def to_json(self):
        return {"kind": "permute_loop", "sketch": self.sketch,
                "loop": self.loop_index, "perm": list(self.permutation)}

    def inverse(self):
        inv = [0] * len(self.permutation)
        for i, p in enumerate(self.permutation):
            inv[p] = i
        return PermuteLoop(self.sketch, self.loop_index, tuple(inv))


@dataclass(frozen=True)
class ParamNoise:
    statement_index: int
    field: str        # e.g. "endpoint[0]", "radius", "distances[1]"
    old: int
    new: int

    def to_json(self):
        return {"kind": "param_noise", "statement": self.statement_index,
                "field": self.field, "old": self.old, "new": self.new}

    def inverse(self):
        return ParamNoise(self.statement_index, self.field, self.new, self.old)


Edit = PermuteLoop | ParamNoise


@dataclass(frozen=True)
class EditLog:
    """Ordered edits: permutations first, then parameter noise.

    Statement indices in ParamNoise refer to the program state after all
    permutations (loop permutations keep statement positions, so indices are
    stable either way). apply() replays the edits; inverse().apply() on the
    corrupted program restores the original byte-for-byte.
    """

    edits: tuple[Edit, ...]

    def to_json(self):
        return [e.to_json() for e in self.edits]

    @staticmethod
    def from_json(data) -> "EditLog":
        out = []
        for d in data:
            if d["kind"] == "permute_loop":
                out.append(PermuteLoop(d["sketch"], d["loop"], tuple(d["perm"])))
            elif d["kind"] == "param_noise":
                out.append(ParamNoise(d["statement"], d["field"], d["old"], d["new"]))
            else:
                raise ValueError(f"unknown edit kind {d.get('kind')!r}")
        return EditLog(tuple(out))

    def inverse(self) -> "EditLog":
        return EditLog(tuple(e.inverse() for e in reversed(self.edits)))

    def apply(self, program: Program) -> Program:
        stmts = list(program.statements)
        for e in self.edits:
            if isinstance(e, PermuteLoop):
                _apply_permute(stmts, e)
            else:
                _apply_noise(stmts, e)
        return Program(tuple(stmts))


def _loop_positions(stmts) -> list[tuple[str, int, list[int]]]:
    """(sketch, loop index within sketch, statement positions) per loop."""
    loops = []
    open_loop: dict[str, int] = {}
    counts: dict[str, int] = {}
    for i, st in enumerate(stmts):
        if isinstance(st, LoopStart):
            k = counts.get(st.sketch, 0)
            counts[st.sketch] = k + 1
            loops.append((st.sketch, k, []))
            open_loop[st.sketch] = len(loops) - 1
        elif isinstance(st, Command):
            loops[open_loop[st.sketch]][2].append(i)
    return loops


def _apply_permute(stmts, e: PermuteLoop) -> None:
    for sketch, k, pos in _loop_positions(stmts):
        if sketch == e.sketch and k == e.loop_index:
            if len(pos) != len(e.permutation):
                raise ValueError("permutation length does not match loop size")
            old = [stmts[p] for p in pos]
            for i, p in enumerate(pos):
                stmts[p] = old[e.permutation[i]]
            return
    raise ValueError(f"no loop {e.loop_index} in sketch {e.sketch}")


# Live (noise-eligible) fields per statement; enums and the ccw flag stay
# untouched, and distances[1] only matters for TwoSided extents.
def _live_fields(st) -> list[str]:
    if isinstance(st, Command):
        g = st.geom
        if isinstance(g, Line):
            return ["endpoint[0]", "endpoint[1]"]
        if isinstance(g, Arc):
            return ["endpoint[0]", "endpoint[1]", "sweep"]
        if isinstance(g, Circle):
            return ["center[0]", "center[1]", "radius"]
    if isinstance(st, ExtrudeParams):
        fields = ["orientation[0]", "orientation[1]", "orientation[2]",
                  "origin[0]", "origin[1]", "origin[2]", "scale", "distances[0]"]
        if st.extent is Extent.TWO_SIDED:
            fields.append("distances[1]")
        return fields
    return []


def _split_field(field: str):
    if field.endswith("]"):
        name, idx = field[:-1].split("[")
        return name, int(idx)
    return field, None


def _get_field(st, field: str) -> int:
    name, idx = _split_field(field)
    obj = st.geom if isinstance(st, Command) else st
    value = getattr(obj, name)
    return value[idx] if idx is not None else value


def _set_field(st, field: str, level: int):
    name, idx = _split_field(field)
    obj = st.geom if isinstance(st, Command) else st
    value = getattr(obj, name)
    if idx is not None:
        value = tuple(level if i == idx else v for i, v in enumerate(value))
    else:
        value = level
    obj = replace(obj, **{name: value})
    return replace(st, geom=obj) if isinstance(st, Command) else obj


def _apply_noise(stmts, e: ParamNoise) -> None:
    st = stmts[e.statement_index]
    if _get_field(st, e.field) != e.old:
        raise ValueError(
            f"statement {e.statement_index} field {e.field} is not {e.old}")
    stmts[e.statement_index] = _set_field(st, e.field, e.new)


# --- error injection --------------------------------------------------------

_NOISE_LO, _NOISE_HI = 5, 25
_REDRAWS = 60


def _still_valid(stmts) -> bool:
    prog = Program(tuple(stmts))
    if validate(prog):
        return False
    try:
        execute(prog)
    except (CadkitError, EmptyResultError, ValueError):
        return False
    return True


def _is_all_line_triangle(stmts, pos) -> bool:
    return len(pos) == 3 and all(
        isinstance(stmts[p].geom, Line) for p in pos)


def _draw_permutation(rng, n: int) -> tuple[int, ...]:
    while True:
        perm = tuple(int(x) for x in rng.permutation(n))
        if perm != tuple(range(n)):
            return perm


def inject_errors(program: Program, ratio: float, seed: int = 0):
    """Corrupt a valid program, returning (corrupted, EditLog).

    Affects ceil(ratio * eligible) commands, where eligible counts geometric
    commands and extrudes. Loops of >= 3 commands may have their command
    order permuted (a whole-loop edit, charged at loop size); the remaining
    quota is filled with parameter noise of +-[5, 25] levels, clamped to
    [0, 255] and guaranteed to change the level. At least one noise edit is
    always applied, and every intermediate program is kept valid and
    executable by redrawing edits that break geometry.
    """
    if not 0.0 < ratio <= 1.0:
        raise ValueError(f"ratio must be in (0, 1], got {ratio}")
    rng = np.random.default_rng(seed)
    stmts = list(program.statements)
    eligible = [i for i, st in enumerate(stmts)
                if isinstance(st, (Command, ExtrudeParams))]
    if not eligible:
        raise NoEligibleEditError("program has no editable commands")
    quota = math.ceil(ratio * len(eligible))

    edits: list[Edit] = []
    affected: set[int] = set()

    # permutation phase: whole-loop edits, leaving room for >= 1 noise edit
    loops = _loop_positions(stmts)
    order = list(rng.permutation(len(loops)))
    for li in order:
        sketch, k, pos = loops[li]
        if len(pos) < 3 or _is_all_line_triangle(stmts, pos):
            continue
        if len(affected) + len(pos) > quota - 1:
            continue
        if rng.random() > 0.5:
            continue
        for _ in range(_REDRAWS):
            perm = _draw_permutation(rng, len(pos))
            edit = PermuteLoop(sketch, k, perm)
            trial = list(stmts)
            _apply_permute(trial, edit)
            if _still_valid(trial):
                stmts = trial
                edits.append(edit)
                affected.update(pos)
                break

    # noise phase: one edit per remaining affected command
    remaining = max(quota - len(affected), 1)
    pool = [i for i in eligible if i not in affected]
    rng.shuffle(pool)
    applied = 0
    for idx in pool:
        if applied >= remaining:
            break
        st = stmts[idx]
        fields = _live_fields(st)
        done = False
        for _ in range(_REDRAWS):
            field = fields[int(rng.integers(len(fields)))]
            old = _get_field(st, field)
            offset = int(rng.integers(_NOISE_LO, _NOISE_HI + 1))
            if rng.random() < 0.5:
                offset = -offset
            new = max(0, min(255, old + offset))
            if new == old:
                continue
            edit = ParamNoise(idx, field, old, new)
            trial = list(stmts)
            _apply_noise(trial, edit)
            if _still_valid(trial):
                stmts = trial
                edits.append(edit)
                affected.add(idx)
                applied += 1
                done = True
                break
        if not done:
            continue
    if applied == 0:
        raise NoEligibleEditError("no parameter edit kept the program valid")

    return Program(tuple(stmts)), EditLog(tuple(edits))
