"""Bijective converter between Programs and integer command sequences.

Rows follow the 16-slot convention: a command tag plus a fixed-width parameter
vector where unused slots hold the sentinel -1.

  slot: 0  1  2      3    4       5      6    7      8   9   10  11     12  13  14  15
        x  y  sweep  ccw  radius  theta  phi  gamma  ox  oy  oz  scale  e1  e2  op  extent

The converter is a bijection on its domain: token-canonical Programs, i.e.
every sketch is extruded exactly once and statements are grouped
declaration -> loops -> extrude with sketches consecutive.  Sequences carry no
explicit end-of-sequence row; EOS exists only as the padding symbol used by the
command-accuracy metric.

JSON form trims trailing sentinels from each row's params (a Line row is
`{"cmd": "Line", "params": [x, y]}`); import pads back to full width and also
accepts untrimmed rows.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from ..errors import CadkitError
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

N_PARAMS = 16
SENTINEL = -1

CMD_SOL = "SOL"
CMD_LINE = "Line"
CMD_ARC = "Arc"
CMD_CIRCLE = "Circle"
CMD_EXT = "Ext"

PARAM_SLOTS = {
    CMD_SOL: (),
    CMD_LINE: (0, 1),
    CMD_ARC: (0, 1, 2, 3),
    CMD_CIRCLE: (0, 1, 4),
    CMD_EXT: (5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15),
}

_OPERATION_ORDER = (Operation.NEW_BODY, Operation.JOIN, Operation.CUT, Operation.INTERSECT)
_EXTENT_ORDER = (Extent.ONE_SIDED, Extent.SYMMETRIC, Extent.TWO_SIDED)
_OPERATION_INDEX = {op: i for i, op in enumerate(_OPERATION_ORDER)}
_EXTENT_INDEX = {ex: i for i, ex in enumerate(_EXTENT_ORDER)}


class SchemaError(CadkitError):
    """A token row violates the fixed-width parameter schema."""


class OrderError(CadkitError):
    """Rows (or statements) are not in convertible canonical order."""


@dataclass(frozen=True)
class TokenRow:
    cmd: str
    params: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(int(p) for p in self.params))


@dataclass(frozen=True)
class TokenSequence:
    rows: tuple[TokenRow, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "rows", tuple(self.rows))

    def __len__(self):
        return len(self.rows)


def _row(cmd: str, used: dict[int, int]) -> TokenRow:
    params = [SENTINEL] * N_PARAMS
    for slot, value in used.items():
        params[slot] = value
    return TokenRow(cmd, tuple(params))


def schema_check(row: TokenRow) -> None:
    """Raise SchemaError unless the row matches its command's parameter mask."""
    if row.cmd not in PARAM_SLOTS:
        raise SchemaError(f"unknown command tag {row.cmd!r}")
    if len(row.params) != N_PARAMS:
        raise SchemaError(
            f"{row.cmd} row has {len(row.params)} params, expected {N_PARAMS}"
        )
    used = set(PARAM_SLOTS[row.cmd])
    for slot, value in enumerate(row.params):
        if slot in used:
            if slot == 3:  # ccw flag
                if value not in (0, 1):
                    raise SchemaError(f"slot 3 (ccw) must be 0/1, got {value}")
            elif slot == 14:
                if not 0 <= value < len(_OPERATION_ORDER):
                    raise SchemaError(f"slot 14 (operation) out of range: {value}")
            elif slot == 15:
                if not 0 <= value < len(_EXTENT_ORDER):
                    raise SchemaError(f"slot 15 (extent) out of range: {value}")
            elif not 0 <= value <= 255:
                raise SchemaError(
                    f"{row.cmd} slot {slot} out of the 0..255 grid: {value}"
                )
        elif value != SENTINEL:
            raise SchemaError(
                f"{row.cmd} slot {slot} is unused and must be {SENTINEL}, got {value}"
            )


def to_tokens(program: Program) -> TokenSequence:
    """Convert a token-canonical Program to its command sequence.

    Raises OrderError when the program is valid but not token-canonical
    (e.g. a sketch that is never extruded, or interleaved sketch statements).
    """
    rows: list[TokenRow] = []
    # state: "top" between sketches, "loops" inside a sketch before its extrude
    state = "top"
    current = None
    loop_open = False
    for st in program.statements:
        if isinstance(st, SketchDecl):
            if state != "top":
                raise OrderError(
                    f"sketch {current} must be extruded before {st.name} is declared"
                )
            state = "loops"
            current = st.name
            loop_open = False
        elif isinstance(st, LoopStart):
            if state != "loops" or st.sketch != current:
                raise OrderError(f"loop on {st.sketch} outside its sketch group")
            rows.append(_row(CMD_SOL, {}))
            loop_open = True
        elif isinstance(st, Command):
            if state != "loops" or st.sketch != current or not loop_open:
                raise OrderError(f"command on {st.sketch} outside its sketch group")
            g = st.geom
            if isinstance(g, Line):
                rows.append(_row(CMD_LINE, {0: g.endpoint[0], 1: g.endpoint[1]}))
            elif isinstance(g, Arc):
                rows.append(
                    _row(
                        CMD_ARC,
                        {0: g.endpoint[0], 1: g.endpoint[1], 2: g.sweep, 3: int(g.ccw)},
                    )
                )
            elif isinstance(g, Circle):
                rows.append(_row(CMD_CIRCLE, {0: g.center[0], 1: g.center[1], 4: g.radius}))
        elif isinstance(st, ExtrudeParams):
            if state != "loops" or st.sketch != current:
                raise OrderError(f"extrude of {st.sketch} outside its sketch group")
            t, p, gm = st.orientation
            x, y, z = st.origin
            e1, e2 = st.distances
            rows.append(
                _row(
                    CMD_EXT,
                    {
                        5: t, 6: p, 7: gm,
                        8: x, 9: y, 10: z,
                        11: st.scale, 12: e1, 13: e2,
                        14: _OPERATION_INDEX[st.operation],
                        15: _EXTENT_INDEX[st.extent],
                    },
                )
            )
            state = "top"
            current = None
            loop_open = False
    if state != "top":
        raise OrderError(f"sketch {current} is never extruded")
    return TokenSequence(tuple(rows))


def from_tokens(seq: TokenSequence) -> Program:
    """Convert a schema-valid command sequence back to a Program."""
    statements = []
    k = -1               # current sketch index
    in_sketch = False
    loop_len = 0         # commands in the open loop; -1 when no loop is open
    loop_has_circle = False

    def name():
        return f"sketch_{k}"

    for i, row in enumerate(seq.rows):
        schema_check(row)
        p = row.params
        if row.cmd == CMD_SOL:
            if in_sketch and loop_len == 0:
                raise OrderError(f"row {i}: empty loop before a new loop start")
            if not in_sketch:
                k += 1
                in_sketch = True
                statements.append(SketchDecl(name()))
            statements.append(LoopStart(name()))
            loop_len = 0
            loop_has_circle = False
        elif row.cmd == CMD_EXT:
            if not in_sketch:
                raise OrderError(f"row {i}: extrude before any loop")
            if loop_len == 0:
                raise OrderError(f"row {i}: extrude after an empty loop")
            statements.append(
                ExtrudeParams(
                    sketch=name(),
                    orientation=(p[5], p[6], p[7]),
                    origin=(p[8], p[9], p[10]),
                    scale=p[11],
                    distances=(p[12], p[13]),
                    operation=_OPERATION_ORDER[p[14]],
                    extent=_EXTENT_ORDER[p[15]],
                )
            )
            in_sketch = False
            loop_len = -1
        else:
            if not in_sketch or loop_len < 0:
                raise OrderError(f"row {i}: {row.cmd} outside any loop")
            if loop_has_circle:
                raise OrderError(f"row {i}: command after a Circle in the same loop")
            if row.cmd == CMD_LINE:
                geom = Line(endpoint=(p[0], p[1]))
            elif row.cmd == CMD_ARC:
                geom = Arc(endpoint=(p[0], p[1]), sweep=p[2], ccw=bool(p[3]))
            else:
                if loop_len > 0:
                    raise OrderError(f"row {i}: Circle in a non-empty loop")
                geom = Circle(center=(p[0], p[1]), radius=p[4])
                loop_has_circle = True
            statements.append(Command(name(), geom))
            loop_len += 1
    if in_sketch:
        raise OrderError("sequence ends inside a sketch (missing extrude row)")
    return Program(tuple(statements))


def to_json(seq: TokenSequence) -> str:
    """Serialize to the JSON interchange form (trailing sentinels trimmed)."""
    rows = []
    for row in seq.rows:
        params = list(row.params)
        while params and params[-1] == SENTINEL:
            params.pop()
        rows.append({"cmd": row.cmd, "params": params})
    return json.dumps({"rows": rows}) + "\n"


def from_json(text: str) -> TokenSequence:
    """Parse the JSON interchange form; schema-checks every row."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"not valid JSON: {e}") from None
    if not isinstance(obj, dict) or "rows" not in obj or not isinstance(obj["rows"], list):
        raise SchemaError('expected an object of the form {"rows": [...]}')
    rows = []
    for i, item in enumerate(obj["rows"]):
        if not isinstance(item, dict) or "cmd" not in item or "params" not in item:
            raise SchemaError(f"row {i}: expected {{cmd, params}}")
        params = item["params"]
        if not isinstance(params, list) or not all(
            isinstance(v, int) and not isinstance(v, bool) for v in params
        ):
            raise SchemaError(f"row {i}: params must be a list of integers")
        if len(params) > N_PARAMS:
            raise SchemaError(f"row {i}: {len(params)} params exceeds {N_PARAMS}")
        padded = list(params) + [SENTINEL] * (N_PARAMS - len(params))
        row = TokenRow(str(item["cmd"]), tuple(padded))
        schema_check(row)
        rows.append(row)
    return TokenSequence(tuple(rows))
