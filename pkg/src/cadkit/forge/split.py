"""Deterministic train/val/test splitting."""

from __future__ import annotations

import math

import numpy as np

from ..errors import CadkitError


class EmptyDatasetError(CadkitError):
    pass


def split_dataset(items, ratios=(0.90, 0.05, 0.05), seed: int = 0):
    """Shuffle items by seed and split into (train, val, test).

    Validation and test sizes are floors of their ratios; the remainder goes
    to train, so small datasets never starve the training split.
    """
    items = list(items)
    if not items:
        raise EmptyDatasetError("cannot split an empty dataset")
    if len(ratios) != 3 or any(r < 0 for r in ratios):
        raise ValueError("ratios must be three nonnegative numbers")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise ValueError(f"ratios must sum to 1, got {sum(ratios)}")
    n = len(items)
    n_val = math.floor(ratios[1] * n)
    n_test = math.floor(ratios[2] * n)
    perm = np.random.default_rng(seed).permutation(n)
    shuffled = [items[i] for i in perm]
    n_train = n - n_val - n_test
    return (
        shuffled[:n_train],
        shuffled[n_train:n_train + n_val],
        shuffled[n_train + n_val:],
    )
