"""Lexer and parser for the CAD-code DSL.

parse() accepts any whitespace between tokens and any keyword-argument order,
but the statement grammar itself is rigid: one statement per line, and only the
five statement forms the printer emits.  Recovery is line-based so a single bad
line yields one diagnostic without hiding the rest of the file.
"""

from __future__ import annotations

import re

from .nodes import (
    Arc,
    Circle,
    Command,
    Diagnostic,
    Extent,
    ExtrudeParams,
    Line,
    LoopStart,
    Operation,
    ParseError,
    Program,
    SketchDecl,
)

_TOKEN_RE = re.compile(
    r"""
      (?P<ws>[ \t]+)
    | (?P<newline>\r?\n)
    | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
    | (?P<number>[0-9]+)
    | (?P<string>"[^"\n]*")
    | (?P<punct>[().,=\[\]])
    """,
    re.VERBOSE,
)

_SKETCH_NAME_RE = re.compile(r"^sketch_(0|[1-9][0-9]*)$")

_OPERATIONS = {op.value: op for op in Operation}
_EXTENTS = {ex.value: ex for ex in Extent}


class _Tok:
    __slots__ = ("kind", "text", "start", "end")

    def __init__(self, kind, text, start, end):
        self.kind = kind
        self.text = text
        self.start = start
        self.end = end

    def __repr__(self):  # pragma: no cover - debug aid
        return f"_Tok({self.kind}, {self.text!r}, {self.start})"


def _lex(text, diags):
    """Tokenize; bad characters produce lex-error diagnostics and are skipped."""
    toks = []
    pos = 0
    n = len(text)
    while pos < n:
        m = _TOKEN_RE.match(text, pos)
        if m is None:
            diags.append(
                Diagnostic(
                    "error",
                    "lex-error",
                    (pos, pos + 1),
                    f"unexpected character {text[pos]!r}",
                )
            )
            pos += 1
            continue
        kind = m.lastgroup
        if kind != "ws":
            toks.append(_Tok(kind, m.group(), m.start(), m.end()))
        pos = m.end()
    return toks


def _split_lines(toks):
    lines = []
    cur = []
    for t in toks:
        if t.kind == "newline":
            if cur:
                lines.append(cur)
                cur = []
        else:
            cur.append(t)
    if cur:
        lines.append(cur)
    return lines


class _Cursor:
    def __init__(self, toks):
        self.toks = toks
        self.i = 0

    def peek(self):
        return self.toks[self.i] if self.i < len(self.toks) else None

    def next(self):
        t = self.peek()
        if t is not None:
            self.i += 1
        return t

    def done(self):
        return self.i >= len(self.toks)


class _StmtError(Exception):
    def __init__(self, code, span, message):
        self.code = code
        self.span = span
        self.message = message


def _span_of(line):
    return (line[0].start, line[-1].end)


def _expect_punct(cur, ch, span):
    t = cur.next()
    if t is None or t.kind != "punct" or t.text != ch:
        at = t.start if t else span[1]
        got = t.text if t else "end of line"
        raise _StmtError("syntax-error", (at, at + 1), f"expected {ch!r}, got {got!r}")
    return t


def _parse_int(cur, span):
    t = cur.next()
    if t is None or t.kind != "number":
        at = t.start if t else span[1]
        raise _StmtError("syntax-error", (at, at + 1), "expected an integer")
    value = int(t.text)
    if value > 255:
        raise _StmtError(
            "out-of-range", (t.start, t.end), f"{value} exceeds the 0..255 grid"
        )
    return value


def _parse_value(cur, span):
    """Parse a kwarg value: int | bool | string | sketch ref | int tuple."""
    t = cur.peek()
    if t is None:
        raise _StmtError("syntax-error", (span[1], span[1] + 1), "expected a value")
    if t.kind == "number":
        return _parse_int(cur, span)
    if t.kind == "name":
        cur.next()
        if t.text == "True":
            return True
        if t.text == "False":
            return False
        return ("ref", t.text)
    if t.kind == "string":
        cur.next()
        return ("str", t.text[1:-1])
    if t.kind == "punct" and t.text == "(":
        cur.next()
        items = [_parse_int(cur, span)]
        while True:
            nxt = cur.peek()
            if nxt is not None and nxt.kind == "punct" and nxt.text == ",":
                cur.next()
                items.append(_parse_int(cur, span))
            else:
                break
        _expect_punct(cur, ")", span)
        return tuple(items)
    raise _StmtError(
        "syntax-error", (t.start, t.end), f"unexpected token {t.text!r} in value"
    )


def _parse_kwargs(cur, span):
    kwargs = {}
    t = cur.peek()
    if t is not None and t.kind == "punct" and t.text == ")":
        return kwargs
    while True:
        t = cur.next()
        if t is None or t.kind != "name":
            at = t.start if t else span[1]
            raise _StmtError("syntax-error", (at, at + 1), "expected a keyword name")
        key = t.text
        if key in kwargs:
            raise _StmtError(
                "syntax-error", (t.start, t.end), f"duplicate keyword {key!r}"
            )
        _expect_punct(cur, "=", span)
        kwargs[key] = _parse_value(cur, span)
        nxt = cur.peek()
        if nxt is not None and nxt.kind == "punct" and nxt.text == ",":
            cur.next()
            continue
        break
    return kwargs


def _take_kwargs(kwargs, spec, span, what):
    """Check kwarg names/shapes against spec: {name: checker}."""
    unknown = set(kwargs) - set(spec)
    if unknown:
        raise _StmtError(
            "syntax-error", span, f"unknown argument {sorted(unknown)[0]!r} to {what}"
        )
    missing = set(spec) - set(kwargs)
    if missing:
        raise _StmtError(
            "syntax-error", span, f"missing argument {sorted(missing)[0]!r} to {what}"
        )
    out = {}
    for key, check in spec.items():
        out[key] = check(kwargs[key], key, span)
    return out


def _want_pair(v, key, span):
    if not (isinstance(v, tuple) and len(v) == 2 and all(isinstance(x, int) for x in v)):
        raise _StmtError("syntax-error", span, f"{key} must be a pair of integers")
    return v


def _want_triple(v, key, span):
    if not (isinstance(v, tuple) and len(v) == 3 and all(isinstance(x, int) for x in v)):
        raise _StmtError("syntax-error", span, f"{key} must be a triple of integers")
    return v


def _want_int(v, key, span):
    if not isinstance(v, int) or isinstance(v, bool):
        raise _StmtError("syntax-error", span, f"{key} must be an integer")
    return v


def _want_bool(v, key, span):
    if not isinstance(v, bool):
        raise _StmtError("syntax-error", span, f"{key} must be True or False")
    return v


def _want_ref(v, key, span):
    if not (isinstance(v, tuple) and len(v) == 2 and v[0] == "ref"):
        raise _StmtError("syntax-error", span, f"{key} must be a sketch variable")
    return v[1]


def _want_enum(table, name):
    def check(v, key, span):
        if not (isinstance(v, tuple) and len(v) == 2 and v[0] == "str"):
            raise _StmtError("syntax-error", span, f"{key} must be a quoted string")
        if v[1] not in table:
            raise _StmtError(
                "bad-enum", span, f"{v[1]!r} is not a valid {name}"
            )
        return table[v[1]]

    return check


def _parse_statement(line):
    """One logical line -> Statement; raises _StmtError on any problem."""
    span = _span_of(line)
    cur = _Cursor(line)
    head = cur.next()
    if head.kind != "name":
        raise _StmtError(
            "syntax-error", (head.start, head.end), f"unexpected {head.text!r}"
        )

    nxt = cur.peek()
    if head.text == "Extrude" and nxt is not None and nxt.text == "(":
        _expect_punct(cur, "(", span)
        kwargs = _parse_kwargs(cur, span)
        _expect_punct(cur, ")", span)
        if not cur.done():
            t = cur.peek()
            raise _StmtError(
                "syntax-error", (t.start, t.end), "trailing tokens after statement"
            )
        vals = _take_kwargs(
            kwargs,
            {
                "sketch": _want_ref,
                "orientation": _want_triple,
                "origin": _want_triple,
                "scale": _want_int,
                "distances": _want_pair,
                "operation": _want_enum(_OPERATIONS, "operation"),
                "extent": _want_enum(_EXTENTS, "extent"),
            },
            span,
            "Extrude",
        )
        return ExtrudeParams(
            sketch=vals["sketch"],
            orientation=vals["orientation"],
            origin=vals["origin"],
            scale=vals["scale"],
            distances=vals["distances"],
            operation=vals["operation"],
            extent=vals["extent"],
        )

    if nxt is not None and nxt.kind == "punct" and nxt.text == "=":
        cur.next()
        _expect_punct(cur, "[", span)
        _expect_punct(cur, "]", span)
        if not cur.done():
            t = cur.peek()
            raise _StmtError(
                "syntax-error", (t.start, t.end), "trailing tokens after statement"
            )
        return SketchDecl(head.text)

    if nxt is not None and nxt.kind == "punct" and nxt.text == ".":
        cur.next()
        meth = cur.next()
        if meth is None or meth.kind != "name":
            at = meth.start if meth else span[1]
            raise _StmtError("syntax-error", (at, at + 1), "expected a method name")
        _expect_punct(cur, "(", span)
        kwargs = _parse_kwargs(cur, span)
        _expect_punct(cur, ")", span)
        if not cur.done():
            t = cur.peek()
            raise _StmtError(
                "syntax-error", (t.start, t.end), "trailing tokens after statement"
            )
        name = head.text
        if meth.text == "new_loop":
            if kwargs:
                raise _StmtError("syntax-error", span, "new_loop() takes no arguments")
            return LoopStart(name)
        if meth.text == "Line":
            vals = _take_kwargs(kwargs, {"endpoint": _want_pair}, span, "Line")
            return Command(name, Line(endpoint=vals["endpoint"]))
        if meth.text == "Arc":
            vals = _take_kwargs(
                kwargs,
                {"endpoint": _want_pair, "sweep": _want_int, "ccw": _want_bool},
                span,
                "Arc",
            )
            return Command(
                name, Arc(endpoint=vals["endpoint"], sweep=vals["sweep"], ccw=vals["ccw"])
            )
        if meth.text == "Circle":
            vals = _take_kwargs(
                kwargs, {"center": _want_pair, "radius": _want_int}, span, "Circle"
            )
            return Command(
                name, Circle(center=vals["center"], radius=vals["radius"])
            )
        raise _StmtError(
            "syntax-error", (meth.start, meth.end), f"unknown method {meth.text!r}"
        )

    at = nxt.start if nxt else head.end
    raise _StmtError("syntax-error", (at, at + 1), "unrecognized statement")


class _SketchState:
    __slots__ = ("loops", "open_span", "open_len", "open_has_circle", "extruded", "total")

    def __init__(self):
        self.loops = 0
        self.open_span = None   # span of the most recent LoopStart, while empty
        self.open_len = -1      # -1: no loop opened yet
        self.open_has_circle = False
        self.extruded = False
        self.total = 0          # commands across all loops


def diagnose(text: str, partial: bool = False):
    """Parse without raising.

    Returns (program | None, diagnostics).  program is None whenever any
    error-severity diagnostic was produced.  With partial=True, trailing
    incompleteness (an empty loop still open at end of input) is tolerated so
    completion prefixes can be checked.
    """
    diags: list[Diagnostic] = []
    toks = _lex(text, diags)
    statements = []
    spans = []
    sketches: dict[str, _SketchState] = {}

    def err(code, span, message):
        diags.append(Diagnostic("error", code, span, message))

    for line in _split_lines(toks):
        span = _span_of(line)
        try:
            st = _parse_statement(line)
        except _StmtError as e:
            err(e.code, e.span, e.message)
            continue

        ok = True
        if isinstance(st, SketchDecl):
            if not _SKETCH_NAME_RE.match(st.name):
                err("bad-sketch-name", span, f"{st.name!r} is not of the form sketch_k")
                ok = False
            elif st.name in sketches:
                err("redeclared-sketch", span, f"{st.name} already declared")
                ok = False
            else:
                expected = f"sketch_{len(sketches)}"
                if st.name != expected:
                    err(
                        "sketch-order",
                        span,
                        f"expected {expected} here, got {st.name}",
                    )
                    ok = False
                sketches[st.name] = _SketchState()
        elif isinstance(st, LoopStart):
            state = sketches.get(st.sketch)
            if state is None:
                err("undeclared-sketch", span, f"{st.sketch} is not declared")
                ok = False
            else:
                if state.extruded:
                    err(
                        "modified-after-extrude",
                        span,
                        f"{st.sketch} was already extruded",
                    )
                    ok = False
                if state.open_len == 0:
                    err("empty-loop", state.open_span, "loop has no commands")
                if ok:
                    state.loops += 1
                    state.open_span = span
                    state.open_len = 0
                    state.open_has_circle = False
        elif isinstance(st, Command):
            state = sketches.get(st.sketch)
            if state is None:
                err("undeclared-sketch", span, f"{st.sketch} is not declared")
                ok = False
            elif state.extruded:
                err("modified-after-extrude", span, f"{st.sketch} was already extruded")
                ok = False
            elif state.open_len < 0:
                err(
                    "command-outside-loop",
                    span,
                    f"no open loop on {st.sketch}; call new_loop() first",
                )
                ok = False
            else:
                is_circle = isinstance(st.geom, Circle)
                if state.open_has_circle or (is_circle and state.open_len > 0):
                    err(
                        "circle-not-alone",
                        span,
                        "a Circle must be the sole command of its loop",
                    )
                    ok = False
                else:
                    state.open_len += 1
                    state.total += 1
                    state.open_has_circle = is_circle
        elif isinstance(st, ExtrudeParams):
            state = sketches.get(st.sketch)
            if state is None:
                err("undeclared-sketch", span, f"{st.sketch} is not declared")
                ok = False
            else:
                if state.extruded:
                    err("duplicate-extrude", span, f"{st.sketch} extruded twice")
                    ok = False
                if state.open_len == 0:
                    err("empty-loop", state.open_span, "loop has no commands")
                    ok = False
                if state.loops == 0 or state.total == 0:
                    err(
                        "empty-sketch-extrude",
                        span,
                        f"{st.sketch} has no drawn loops to extrude",
                    )
                    ok = False
                if ok:
                    state.extruded = True
        if ok:
            statements.append(st)
            spans.append(span)

    if not partial:
        for name, state in sketches.items():
            if state.open_len == 0:
                err("empty-loop", state.open_span, "loop has no commands")

    if any(d.severity == "error" for d in diags):
        return None, diags
    return Program(tuple(statements), tuple(spans)), diags


def parse(text: str, partial: bool = False) -> Program:
    """Parse DSL source into a Program; raises ParseError with diagnostics."""
    program, diags = diagnose(text, partial=partial)
    if program is None:
        raise ParseError([d for d in diags if d.severity == "error"])
    return program
