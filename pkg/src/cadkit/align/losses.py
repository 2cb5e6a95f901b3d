"""Alignment and token losses."""

from __future__ import annotations

import numpy as np

from ..errors import CadkitError
from .tensor import Tensor, log_softmax


class ZeroNormError(CadkitError):
    pass


class LengthMismatchError(CadkitError):
    pass


def l2_normalize(x: Tensor, eps: float = 1e-12) -> Tensor:
    norms = (x * x).sum(axis=-1, keepdims=True) ** 0.5
    if np.any(norms.data < eps):
        raise ZeroNormError("cannot normalize a zero-norm row")
    return x / norms


def contrastive_loss(z_con: Tensor, t_eos: Tensor, temperature: float) -> Tensor:
    """Symmetric InfoNCE over a batch of paired rows.

    Rows are L2-normalized, similarities divided by the temperature, and the
    two directional log-softmax diagonals averaged with a leading -1/(2B).
    A singleton batch gives exactly zero.
    """
    if temperature <= 0:
        raise ValueError("temperature must be positive")
    if z_con.shape != t_eos.shape or z_con.ndim != 2:
        raise LengthMismatchError(
            f"paired batches must match: {z_con.shape} vs {t_eos.shape}")
    b = z_con.shape[0]
    zn = l2_normalize(z_con)
    tn = l2_normalize(t_eos)
    sims = (zn @ tn.swap_last()) * (1.0 / temperature)
    diag = (np.arange(b), np.arange(b))
    brep_to_code = log_softmax(sims, axis=1)[diag]
    code_to_brep = log_softmax(sims, axis=0)[diag]
    return (brep_to_code.sum() + code_to_brep.sum()) * (-1.0 / (2 * b))


def token_cross_entropy(logits: Tensor, targets: np.ndarray,
                        weights: np.ndarray | None = None) -> Tensor:
    """Sum over positions of -log P(target), optionally masked by weights."""
    targets = np.asarray(targets, dtype=np.int64)
    if logits.ndim != 2 or logits.shape[0] != targets.shape[0]:
        raise LengthMismatchError(
            f"logits {logits.shape} do not cover {targets.shape[0]} targets")
    picked = log_softmax(logits, axis=-1)[(np.arange(len(targets)), targets)]
    if weights is not None:
        picked = picked * Tensor(np.asarray(weights, dtype=np.float64))
    return -picked.sum()


def captioning_loss(logits_batch, targets_batch) -> Tensor:
    """Teacher-forced token loss: per-sample sum over positions, batch mean."""
    if len(logits_batch) != len(targets_batch):
        raise LengthMismatchError("batch sizes differ")
    if not logits_batch:
        raise LengthMismatchError("empty batch")
    total = None
    for logits, targets in zip(logits_batch, targets_batch):
        term = token_cross_entropy(logits, targets)
        total = term if total is None else total + term
    return total * (1.0 / len(logits_batch))


def captioning_loss_padded(logits: Tensor, targets: np.ndarray,
                           weights: np.ndarray) -> Tensor:
    """captioning_loss over right-padded (B, L, V) logits.

    weights zero out padding, so this equals the per-sample-list form on the
    unpadded rows: weighted sum of -log P(target), divided by B.
    """
    targets = np.asarray(targets, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    if logits.ndim != 3 or logits.shape[:2] != targets.shape:
        raise LengthMismatchError(
            f"logits {logits.shape} do not cover targets {targets.shape}")
    if weights.shape != targets.shape:
        raise LengthMismatchError("weights shape does not match targets")
    b, n = targets.shape
    rows, cols = np.indices((b, n))
    picked = log_softmax(logits, axis=-1)[(rows, cols, targets)]
    return -(picked * Tensor(weights)).sum() * (1.0 / b)


def total_loss(l_con: Tensor, l_cap: Tensor,
               lambda_con: float, lambda_cap: float) -> Tensor:
    if lambda_con < 0 or lambda_cap < 0:
        raise ValueError("loss weights must be nonnegative")
    return l_con * lambda_con + l_cap * lambda_cap


def stage1_loss(logits: Tensor, targets: np.ndarray,
                target_mask: np.ndarray) -> Tensor:
    """Cross-entropy restricted to target positions.

    logits cover the whole packed sequence (features, prompt, code); the mask
    selects the positions whose next-token predictions are scored, so
    perturbing logits anywhere else cannot change the loss.
    """
    mask = np.asarray(target_mask, dtype=np.float64)
    if mask.shape[0] != logits.shape[0]:
        raise LengthMismatchError("mask length does not match logits")
    return token_cross_entropy(logits, targets, weights=mask)
