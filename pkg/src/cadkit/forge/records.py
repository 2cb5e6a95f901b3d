"""Training-record assembly and JSONL IO.

Records always carry the same six fields, in order: task, brep_ref, prompt,
input_code, target, meta. input_code is null for tasks without a code input
(reverse, qa). Prompt strings live in the versioned prompts.json asset.
"""

from __future__ import annotations

import hashlib
import json
import os
from importlib import resources

import numpy as np

from ..cadcode.parser import parse
from ..cadcode.printer import serialize
from ..errors import CadkitError


class TemplateMismatchError(CadkitError):
    pass


def prompt_templates() -> dict:
    with resources.files("cadkit.forge").joinpath("prompts.json").open(
            "r", encoding="utf-8") as fh:
        return json.load(fh)


_PROMPTS = prompt_templates()
_LETTERS = ("A", "B", "C", "D")

TASKS = ("reverse", "completion", "correction", "qa")


def record_seed(master_seed: int, item_id: str) -> int:
    """Stable 64-bit per-item seed from the master seed and item id."""
    digest = hashlib.sha256(f"{master_seed}\x1f{item_id}".encode()).digest()
    return int(np.random.SeedSequence(
        int.from_bytes(digest, "little")).generate_state(1)[0])


def _format_qa(question: str, options) -> str:
    if len(options) != len(_LETTERS):
        raise TemplateMismatchError(
            f"qa needs exactly {len(_LETTERS)} options, got {len(options)}")
    body = "\n".join(f"{l}. {o}" for l, o in zip(_LETTERS, options))
    return _PROMPTS["qa"].format(question=question, options=body)


def build_record(task: str, brep_ref: str, payload, meta: dict | None = None) -> dict:
    """Assemble one record dict.

    payload by task: reverse -> Program; completion -> (prefix, full);
    correction -> (corrupted, original); qa -> (question, options, answer).
    Code-task targets are checked to parse; qa answers must be a letter A-D.
    """
    meta = dict(meta or {})
    if task == "reverse":
        prompt = _PROMPTS["reverse"]
        input_code = None
        target = serialize(payload)
    elif task == "completion":
        try:
            prefix, full = payload
        except (TypeError, ValueError):
            raise TemplateMismatchError("completion payload must be (prefix, full)")
        prompt = _PROMPTS["completion"]
        input_code = serialize(prefix)
        target = serialize(full)
        if not target.startswith(input_code):
            raise TemplateMismatchError("prefix is not a prefix of the full code")
    elif task == "correction":
        try:
            corrupted, original = payload
        except (TypeError, ValueError):
            raise TemplateMismatchError(
                "correction payload must be (corrupted, original)")
        prompt = _PROMPTS["correction"]
        input_code = serialize(corrupted)
        target = serialize(original)
    elif task == "qa":
        try:
            question, options, answer = payload
        except (TypeError, ValueError):
            raise TemplateMismatchError(
                "qa payload must be (question, options, answer)")
        if answer not in _LETTERS:
            raise TemplateMismatchError(f"qa answer must be one of {_LETTERS}")
        prompt = _format_qa(question, options)
        input_code = None
        target = answer
    else:
        raise TemplateMismatchError(f"unknown task {task!r}")

    if task != "qa":
        parse(target)  # invariant: code targets parse

    return {
        "task": task,
        "brep_ref": brep_ref,
        "prompt": prompt,
        "input_code": input_code,
        "target": target,
        "meta": meta,
    }


def write_records(path: str, records) -> None:
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        for r in records:
            fh.write(json.dumps(r, ensure_ascii=False))
            fh.write("\n")
    os.replace(tmp, path)


def load_records(path: str) -> list[dict]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CadkitError(f"{path}:{lineno}: malformed record: {exc}")
            out.append(rec)
    return out
