"""End-to-end record building for directories of programs.

Every item gets its face-adjacency tensor archive plus one record; items are
processed in sorted id order and each record draws its own seed from the
master seed, so reruns are byte-identical regardless of batching.
"""

from __future__ import annotations

import os

import numpy as np

from ..brepgraph.graph import export_tensors, graph_tensors_for_program
from ..cadcode.parser import ParseError, parse
from ..errors import CadkitError
from .corrupt import inject_errors, mask_for_completion
from .records import build_record, record_seed

KEEP_RANGE = (0.3, 0.5)
RATIO_RANGE = (0.5, 0.8)


def load_program_dir(path: str, suffix: str = ".cadc") -> list[tuple[str, str]]:
    """(item id, source text) pairs for every program file, sorted by id."""
    names = sorted(f for f in os.listdir(path) if f.endswith(suffix))
    if not names:
        raise CadkitError(f"no {suffix} files in {path}")
    out = []
    for name in names:
        with open(os.path.join(path, name), "r", encoding="utf-8") as fh:
            out.append((name[: -len(suffix)], fh.read()))
    return out


def _archive_for(item_id: str, prog, archive_dir: str, resolution: int) -> str:
    os.makedirs(archive_dir, exist_ok=True)
    ref = os.path.join(archive_dir, item_id + ".json")
    export_tensors(graph_tensors_for_program(prog, resolution=resolution), ref)
    return ref


def build_code_records(
    task: str,
    items: list[tuple[str, str]],
    archive_dir: str,
    master_seed: int = 0,
    resolution: int = 10,
    keep_range: tuple[float, float] = KEEP_RANGE,
    ratio_range: tuple[float, float] = RATIO_RANGE,
) -> list[dict]:
    """Records for one code task over (item id, source) pairs.

    Ground-truth sources must parse; that failure is a data error. The
    completion keep fraction and the corruption ratio are drawn uniformly
    from their ranges per record.
    """
    if task not in ("reverse", "completion", "correction"):
        raise ValueError(f"not a code task: {task!r}")
    records = []
    for item_id, text in sorted(items):
        try:
            prog = parse(text)
        except ParseError as exc:
            raise CadkitError(f"item {item_id}: ground truth does not parse: {exc}")
        ref = _archive_for(item_id, prog, archive_dir, resolution)
        seed = record_seed(master_seed, item_id)
        meta = {"item_id": item_id, "seed": seed}
        if task == "reverse":
            rec = build_record("reverse", ref, prog, meta)
        elif task == "completion":
            rng = np.random.default_rng(seed)
            keep = float(rng.uniform(*keep_range))
            prefix, full = mask_for_completion(prog, keep)
            meta["keep_fraction"] = keep
            rec = build_record("completion", ref, (prefix, full), meta)
        else:
            rng = np.random.default_rng(seed)
            ratio = float(rng.uniform(*ratio_range))
            corrupted, log = inject_errors(prog, ratio, seed=seed)
            meta["ratio"] = ratio
            meta["edits"] = log.to_json()
            rec = build_record("correction", ref, (corrupted, prog), meta)
        records.append(rec)
    return records


def build_qa_records(questions: list[dict], master_seed: int = 0) -> list[dict]:
    """Records wrapping externally supplied multiple-choice questions.

    Each question dict needs id, brep_ref, question, options (list of 4),
    answer (letter). Missing keys are data errors.
    """
    records = []
    for q in sorted(questions, key=lambda d: str(d.get("id", ""))):
        try:
            item_id = q["id"]
            ref = q["brep_ref"]
            payload = (q["question"], q["options"], q["answer"])
        except (KeyError, TypeError) as exc:
            raise CadkitError(f"malformed question entry: {exc}")
        meta = {"item_id": item_id, "seed": record_seed(master_seed, str(item_id))}
        records.append(build_record("qa", ref, payload, meta))
    return records
