"""Deterministic single-threaded training loops and checkpoint IO."""

from __future__ import annotations

import json
import os

import numpy as np

from ..archive import read_archive, write_archive
from ..errors import CadkitError
from .encoder import encode_brep
from .losses import captioning_loss_padded, contrastive_loss, total_loss
from .model import AlignConfig, AlignModel, StageModel
from .tensor import Tensor


class DivergenceError(CadkitError):
    def __init__(self, step: int):
        self.step = step
        super().__init__(f"loss became non-finite at step {step}")


def dataset_from_records(records: list[dict], base_dir: str = "."):
    """(graph tensors, task, input ids, target ids) tuples from forge records.

    brep_ref paths resolve relative to base_dir unless absolute. qa records
    are rejected: their targets are answer letters, not token streams.
    """
    from .tokenizer import Tokenizer

    tok = Tokenizer()
    out = []
    for i, rec in enumerate(records):
        task = rec.get("task")
        if task not in ("reverse", "completion", "correction"):
            raise CadkitError(f"record {i}: cannot train tokens on task {task!r}")
        ref = rec["brep_ref"]
        if not os.path.isabs(ref):
            ref = os.path.join(base_dir, ref)
        tensors = read_archive(ref)
        target = tok.encode(rec["target"])
        inp = rec.get("input_code")
        out.append((tensors, task, None if inp is None else tok.encode(inp),
                    target))
    return out


class Adam:
    def __init__(self, params: dict[str, Tensor], lr: float = 3e-4,
                 betas=(0.9, 0.999), eps: float = 1e-8):
        self.params = dict(params)
        self.lr = lr
        self.b1, self.b2 = betas
        self.eps = eps
        self.t = 0
        self.m = {k: np.zeros_like(p.data) for k, p in self.params.items()}
        self.v = {k: np.zeros_like(p.data) for k, p in self.params.items()}

    def zero_grad(self):
        for p in self.params.values():
            p.grad = None

    def step(self):
        self.t += 1
        for k, p in self.params.items():
            g = p.grad
            if g is None:
                continue
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            mhat = self.m[k] / (1 - self.b1 ** self.t)
            vhat = self.v[k] / (1 - self.b2 ** self.t)
            p.data -= self.lr * mhat / (np.sqrt(vhat) + self.eps)


def trainable_params(model, freeze_encoder: bool) -> dict[str, Tensor]:
    params = model.params()
    if freeze_encoder:
        return {k: v for k, v in params.items() if not k.startswith("encoder.")}
    return params


# --- checkpoints -------------------------------------------------------------

def save_checkpoint(path: str, model, step: int, rng_state: dict | None = None):
    """Parameter archive next to a JSON manifest (config, step, RNG state)."""
    params = model.params()
    write_archive(path, {k: p.data for k, p in params.items()})
    manifest = {
        "config": model.config.to_json(),
        "step": step,
        "rng_state": rng_state,
        "param_names": list(params.keys()),
    }
    mpath = manifest_path(path)
    tmp = mpath + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    os.replace(tmp, mpath)


def manifest_path(path: str) -> str:
    return path[: -len(".json")] + ".manifest.json"


def load_checkpoint(path: str):
    arrays = read_archive(path)
    with open(manifest_path(path), "r", encoding="utf-8") as fh:
        manifest = json.load(fh)
    return arrays, manifest


def load_params_into(model, arrays: dict):
    params = model.params()
    missing = set(params) - set(arrays)
    if missing:
        raise CadkitError(f"checkpoint is missing parameters: {sorted(missing)[:4]}")
    for k, p in params.items():
        arr = np.asarray(arrays[k], dtype=np.float64)
        if arr.shape != p.data.shape:
            raise CadkitError(
                f"checkpoint shape mismatch for {k}: {arr.shape} vs {p.data.shape}")
        p.data[...] = arr


def write_history(path: str, rows: list[tuple]):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write("step,loss_con,loss_cap,loss_total\n")
        for step, lc, lp, lt in rows:
            fh.write(f"{step},{lc:.10g},{lp:.10g},{lt:.10g}\n")
    os.replace(tmp, path)


# --- alignment stage ----------------------------------------------------------

def retrieval_accuracy(model: AlignModel, dataset) -> float:
    """Mean of both-direction top-1 retrieval by cosine argmax."""
    z = model.pooled_features_batch([tensors for tensors, _ in dataset])[1].data
    t = model.unimodal_eos_batch([ids for _, ids in dataset]).data
    z = z / np.linalg.norm(z, axis=1, keepdims=True)
    t = t / np.linalg.norm(t, axis=1, keepdims=True)
    sims = z @ t.T
    n = len(dataset)
    fwd = float(np.mean(np.argmax(sims, axis=1) == np.arange(n)))
    bwd = float(np.mean(np.argmax(sims, axis=0) == np.arange(n)))
    return (fwd + bwd) / 2.0


def train_align(dataset, config: AlignConfig, steps: int, seed: int = 0,
                lr: float = 3e-4, eval_every: int = 25,
                target_retrieval: float = 1.0):
    """Joint contrastive + captioning training on (graph tensors, ids) pairs.

    Full-batch, deterministic. Stops early once both-direction retrieval
    reaches target_retrieval. Returns (model, history rows, exit step).
    """
    if len(dataset) < 2:
        raise CadkitError("alignment needs at least two pairs")
    model = AlignModel(config, seed=seed)
    opt = Adam(trainable_params(model, freeze_encoder=False), lr=lr)
    tensors_list = [tensors for tensors, _ in dataset]
    ids_list = [ids for _, ids in dataset]
    history = []
    exit_step = steps
    for step in range(1, steps + 1):
        opt.zero_grad()
        z_gen, z_con = model.pooled_features_batch(tensors_list)
        t_eos = model.unimodal_eos_batch(ids_list)
        l_con = contrastive_loss(z_con, t_eos, config.temperature)
        logits, targets, weights = model.caption_logits_batch(z_gen, ids_list)
        l_cap = captioning_loss_padded(logits, targets, weights)
        loss = total_loss(l_con, l_cap, config.lambda_con, config.lambda_cap)
        if not np.isfinite(loss.data):
            raise DivergenceError(step)
        loss.backward()
        opt.step()
        history.append((step, float(l_con.data), float(l_cap.data),
                        float(loss.data)))
        if step % eval_every == 0 or step == steps:
            if retrieval_accuracy(model, dataset) >= target_retrieval:
                exit_step = step
                break
    return model, history, exit_step


# --- staged decoder training ---------------------------------------------------

def _encode_frozen(model: StageModel, dataset):
    """Precompute z_brep per item; valid because the encoder never trains here."""
    feats = []
    for item in dataset:
        tensors = item[0]
        feats.append(encode_brep(model.encoder, tensors).data.copy())
    return feats


def _stage_records(dataset, task_default: str):
    """Normalize dataset entries to (tensors, task, input_ids, target_ids)."""
    out = []
    for item in dataset:
        if len(item) == 2:
            tensors, target = item
            out.append((tensors, task_default, None, list(target)))
        else:
            tensors, task, input_ids, target = item
            out.append((tensors, task,
                        None if input_ids is None else list(input_ids),
                        list(target)))
    return out


def exact_match_count(model: StageModel, feats, records) -> int:
    return sum(
        1 for z, (_, task, inp, tgt) in zip(feats, records)
        if model.teacher_forced_match(z, task, tgt, inp))


def train_stage(dataset, config: AlignConfig, steps: int, seed: int = 0,
                lr: float = 3e-4, init_arrays: dict | None = None,
                task_default: str = "reverse", eval_every: int = 50,
                target_matches: int | None = None,
                loss_gate: float = 0.05):
    """Token-loss training of the stage decoder with a frozen encoder.

    Stage 1 passes init_arrays=None (fresh weights) and reverse records;
    stage 2 passes the stage-1 checkpoint arrays and records that may carry
    input code. Early exit once target_matches sequences regenerate exactly
    (checked only when the per-token loss clears loss_gate, since the check
    costs a forward pass per record).
    """
    records = _stage_records(dataset, task_default)
    model = StageModel(config, seed=seed)
    if init_arrays is not None:
        load_params_into(model, init_arrays)
    opt = Adam(trainable_params(model, freeze_encoder=True), lr=lr)
    feats = _encode_frozen(model, records)
    triples = [(task, inp, tgt) for _, task, inp, tgt in records]
    history = []
    exit_step = steps
    for step in range(1, steps + 1):
        opt.zero_grad()
        loss, n_tokens = model.batch_loss(feats, triples)
        if not np.isfinite(loss.data):
            raise DivergenceError(step)
        loss.backward()
        opt.step()
        per_token = float(loss.data) * len(records) / n_tokens
        history.append((step, 0.0, float(loss.data), float(loss.data)))
        if target_matches is not None and (step % eval_every == 0
                                           or step == steps):
            if per_token < loss_gate:
                if model.batch_match_count(feats, triples) >= target_matches:
                    exit_step = step
                    break
    return model, history, exit_step
