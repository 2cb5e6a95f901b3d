"""Dataset-level evaluation: validity, ambiguity statistics, reports."""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from statistics import median

import numpy as np

from ..cadcode.parser import ParseError, parse
from ..cadcode.tokens import TokenSequence, to_tokens
from ..cadcode.validate import validate
from ..errors import CadkitError
from ..geom.sample import SamplingExhaustedError, normalize, sample_surface
from ..geom.solid import EmptyResultError, execute
from .chamfer import chamfer
from .compare import Tolerance, acc_cmd, acc_param, param_slot_count

EMPTY_TOKENS = TokenSequence(())


def program_is_valid(text: str, n_points: int = 256, seed: int = 0) -> bool:
    """True iff the source parses, validates, executes, and yields a
    non-empty sampled boundary."""
    try:
        prog = parse(text)
    except ParseError:
        return False
    if validate(prog):
        return False
    try:
        solid = execute(prog)
        sample_surface(solid, n_points, seed=seed)
    except (EmptyResultError, SamplingExhaustedError):
        return False
    return True


def invalid_ratio(texts: list[str], n_points: int = 256, seed: int = 0) -> float:
    """Fraction of sources that are not valid programs (parse, validation,
    execution, or empty-boundary failures all count)."""
    if not texts:
        raise ValueError("invalid_ratio of an empty list is undefined")
    bad = sum(1 for t in texts if not program_is_valid(t, n_points=n_points, seed=seed))
    return bad / len(texts)


def ambiguity_stats(
    results: list[tuple[float, float]],
    cd_threshold: float = 0.01,
    acc_thresholds: tuple[float, ...] = (0.9, 0.8),
) -> dict[float, float | None]:
    """Among samples whose chamfer distance is at most cd_threshold, the
    fraction whose accuracy falls below each threshold.

    results holds (chamfer, accuracy) pairs. An empty subset leaves every
    fraction undefined (None), never zero.
    """
    subset = [acc for cd, acc in results if cd <= cd_threshold]
    if not subset:
        return {t: None for t in acc_thresholds}
    n = len(subset)
    return {t: sum(1 for a in subset if a < t) / n for t in acc_thresholds}


@dataclass
class MetricReport:
    """Aggregate metrics over an evaluation set.

    cd_values holds raw (unscaled) chamfer distances for the pairs where both
    clouds exist; rendering applies the x1e3 display convention.
    """

    acc_cmd: float
    acc_param: float
    cd_values: list[float]
    invalid_ratio: float
    n_samples: int
    config: dict
    counts: dict = field(default_factory=dict)

    @property
    def cd_median(self) -> float | None:
        if not self.cd_values:
            return None
        return float(median(self.cd_values))

    def render(self) -> dict:
        cd = self.cd_median
        return {
            "acc_cmd": self.acc_cmd,
            "acc_param": self.acc_param,
            "cd_median_e3": None if cd is None else cd * 1e3,
            "invalid_ratio_pct": self.invalid_ratio * 100.0,
            "n_samples": self.n_samples,
            "config": dict(self.config),
        }

    def write_json(self, path: str) -> None:
        tmp = path + ".tmp"
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(self.render(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        os.replace(tmp, path)


def _item_seed(seed: int, index: int) -> int:
    ss = np.random.SeedSequence([int(seed), int(index)])
    return int(ss.generate_state(1)[0])


def _cloud_of(prog, n_points: int, seed: int) -> np.ndarray | None:
    try:
        solid = execute(prog)
        pts = sample_surface(solid, n_points, seed=seed)
        return normalize(pts)
    except (EmptyResultError, SamplingExhaustedError):
        return None


def evaluate_pair(
    gt_text: str,
    pred_text: str,
    index: int = 0,
    tol: Tolerance = Tolerance(),
    cd_power: int = 2,
    n_points: int = 2048,
    seed: int = 0,
) -> dict:
    """Metrics for one (ground truth, prediction) pair.

    The ground truth must be a valid program (a failure there is a data
    error, not a model error). Prediction failures degrade gracefully: an
    unparseable prediction scores against an empty token sequence and has no
    chamfer value; any parse/validate/execute/empty-boundary failure marks
    the prediction invalid.
    """
    try:
        gt_prog = parse(gt_text)
    except ParseError as exc:
        raise CadkitError(f"ground truth does not parse: {exc}") from exc
    gt_tokens = to_tokens(gt_prog)
    # both sides draw with the same per-item seed so that an exact-match
    # prediction yields an identical cloud and a chamfer of exactly zero
    gt_cloud = _cloud_of(gt_prog, n_points, _item_seed(seed, index))
    if gt_cloud is None:
        raise CadkitError("ground truth program has no sampleable boundary")

    pred_prog = None
    try:
        pred_prog = parse(pred_text)
        pred_tokens = to_tokens(pred_prog)
    except ParseError:
        pred_tokens = EMPTY_TOKENS

    invalid = pred_prog is None or bool(validate(pred_prog))
    cd = None
    if not invalid:
        pred_cloud = _cloud_of(pred_prog, n_points, _item_seed(seed, index))
        if pred_cloud is None:
            invalid = True
        else:
            cd = chamfer(gt_cloud, pred_cloud, power=cd_power)

    return {
        "acc_cmd": acc_cmd(gt_tokens, pred_tokens),
        "acc_param": acc_param(gt_tokens, pred_tokens, tol),
        "param_slots": param_slot_count(gt_tokens),
        "cd": cd,
        "invalid": invalid,
    }


def evaluate_sets(
    gt_dir: str,
    pred_dir: str,
    tol: Tolerance = Tolerance(),
    cd_power: int = 2,
    n_points: int = 2048,
    seed: int = 0,
    suffix: str = ".cadc",
) -> MetricReport:
    """Evaluate a directory of predictions against a directory of ground
    truths, paired by identical filename.

    A ground-truth file with no prediction counterpart counts as an invalid
    (empty) prediction. Items are processed in sorted filename order, so the
    aggregate is deterministic.
    """
    names = sorted(f for f in os.listdir(gt_dir) if f.endswith(suffix))
    if not names:
        raise CadkitError(f"no {suffix} files in {gt_dir}")
    a_cmd = []
    a_param = []
    defaulted = 0
    cd_values = []
    invalid = 0
    for i, name in enumerate(names):
        with open(os.path.join(gt_dir, name), "r", encoding="utf-8") as fh:
            gt_text = fh.read()
        pred_path = os.path.join(pred_dir, name)
        if os.path.exists(pred_path):
            with open(pred_path, "r", encoding="utf-8") as fh:
                pred_text = fh.read()
        else:
            pred_text = ""
        row = evaluate_pair(
            gt_text, pred_text, index=i, tol=tol,
            cd_power=cd_power, n_points=n_points, seed=seed,
        )
        a_cmd.append(row["acc_cmd"])
        a_param.append(row["acc_param"])
        if row["param_slots"] == 0:
            defaulted += 1
        if row["cd"] is not None:
            cd_values.append(row["cd"])
        if row["invalid"]:
            invalid += 1
    n = len(names)
    return MetricReport(
        acc_cmd=float(np.mean(a_cmd)),
        acc_param=float(np.mean(a_param)),
        cd_values=cd_values,
        invalid_ratio=invalid / n,
        n_samples=n,
        config={
            "delta": tol.delta,
            "cd_power": cd_power,
            "n_points": n_points,
            "seed": seed,
        },
        counts={"n_cd": len(cd_values), "acc_param_defaulted": defaulted},
    )
