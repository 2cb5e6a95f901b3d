"""CAD modeling DSL: AST, parser, printer, token codec, validation, generator."""

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
    sketch_groups,
)
from .parser import diagnose, parse
from .printer import serialize, statement_text
from .tokens import (
    CMD_ARC,
    CMD_CIRCLE,
    CMD_EXT,
    CMD_LINE,
    CMD_SOL,
    N_PARAMS,
    PARAM_SLOTS,
    SENTINEL,
    OrderError,
    SchemaError,
    TokenRow,
    TokenSequence,
    from_json,
    from_tokens,
    schema_check,
    to_json,
    to_tokens,
)
from .validate import validate
from .generate import generate_program, generate_programs

__all__ = [
    "Arc", "Circle", "Line", "Command", "SketchDecl", "LoopStart",
    "ExtrudeParams", "Operation", "Extent", "Program", "Diagnostic",
    "ParseError", "sketch_groups",
    "parse", "diagnose", "serialize", "statement_text",
    "TokenRow", "TokenSequence", "to_tokens", "from_tokens",
    "to_json", "from_json", "schema_check",
    "SchemaError", "OrderError",
    "N_PARAMS", "SENTINEL", "PARAM_SLOTS",
    "CMD_SOL", "CMD_LINE", "CMD_ARC", "CMD_CIRCLE", "CMD_EXT",
    "validate", "generate_program", "generate_programs",
]
