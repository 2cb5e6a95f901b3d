"""Closed-vocabulary tokenizer over canonical DSL text.

Tokens are words, numerals 0-255, and single punctuation marks; underscores
split like punctuation so sketch names of any index stay in vocabulary.
Detokenization restores canonical spacing exactly: a space after every
comma, spaces around '=' only in the list-assignment form, newline tokens as
line breaks, everything else concatenated.
"""

from __future__ import annotations

import re

from ..errors import CadkitError

PAD, BOS, EOS, SEP = "[PAD]", "[BOS]", "[EOS]", "[SEP]"
TASK_TOKENS = ("[reverse]", "[completion]", "[correction]", "[qa]")

_WORDS = (
    "sketch", "new", "loop",
    "Line", "Arc", "Circle", "Extrude",
    "endpoint", "sweep", "ccw", "center", "radius",
    "orientation", "origin", "scale", "distances", "operation", "extent",
    "True", "False",
    "NewBody", "Join", "Cut", "Intersect",
    "OneSided", "Symmetric", "TwoSided",
)
_PUNCT = (".", "(", ")", ",", "=", "[", "]", '"', "_")
_NEWLINE = "[NL]"

_SCAN = re.compile(r"[A-Za-z]+|\d+|[^\sA-Za-z\d]|\n")


class UnknownTokenError(CadkitError):
    pass


class Tokenizer:
    def __init__(self):
        vocab = [PAD, BOS, EOS, SEP, *TASK_TOKENS, _NEWLINE]
        vocab += list(_WORDS) + list(_PUNCT)
        vocab += [str(i) for i in range(256)]
        self.tokens = tuple(vocab)
        self.index = {t: i for i, t in enumerate(vocab)}
        self.pad_id = self.index[PAD]
        self.bos_id = self.index[BOS]
        self.eos_id = self.index[EOS]
        self.sep_id = self.index[SEP]
        self.task_ids = {t.strip("[]"): self.index[t] for t in TASK_TOKENS}

    @property
    def vocab_size(self) -> int:
        return len(self.tokens)

    def encode(self, text: str) -> list[int]:
        ids = []
        for m in _SCAN.finditer(text):
            tok = m.group(0)
            if tok == "\n":
                tok = _NEWLINE
            elif tok.isdigit():
                if not 0 <= int(tok) <= 255 or tok != str(int(tok)):
                    raise UnknownTokenError(f"numeral out of range: {tok!r}")
            i = self.index.get(tok)
            if i is None:
                raise UnknownTokenError(f"token not in vocabulary: {tok!r}")
            ids.append(i)
        return ids

    def decode(self, ids) -> str:
        toks = []
        for i in ids:
            if not 0 <= int(i) < len(self.tokens):
                raise UnknownTokenError(f"id out of range: {i}")
            toks.append(self.tokens[int(i)])
        out = []
        for pos, t in enumerate(toks):
            if t in (PAD, BOS, EOS, SEP) or t in TASK_TOKENS:
                continue
            if t == _NEWLINE:
                out.append("\n")
            elif t == ",":
                out.append(", ")
            elif t == "=":
                nxt = toks[pos + 1] if pos + 1 < len(toks) else None
                out.append(" = " if nxt == "[" else "=")
            else:
                out.append(t)
        return "".join(out)
