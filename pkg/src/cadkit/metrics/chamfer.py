"""Chamfer distance between point clouds."""

from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree
from scipy.spatial.distance import cdist

from ..errors import CadkitError


class EmptyCloudError(CadkitError):
    """Chamfer distance is undefined for an empty point cloud."""


def _as_cloud(p) -> np.ndarray:
    a = np.asarray(p, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != 3:
        raise ValueError(f"expected an (n, 3) point cloud, got shape {a.shape}")
    if a.shape[0] == 0:
        raise EmptyCloudError("empty point cloud")
    return a


def chamfer(p, q, power: int = 2) -> float:
    """Symmetric chamfer distance: sum of the two mean nearest-neighbor terms.

    power selects |d| (1) or d^2 (2) on the nearest-neighbor Euclidean
    distances. Exact nearest neighbors (k-d tree), no approximation.
    """
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    a = _as_cloud(p)
    b = _as_cloud(q)
    da, _ = cKDTree(b).query(a)
    db, _ = cKDTree(a).query(b)
    if power == 2:
        da = da * da
        db = db * db
    return float(np.mean(da) + np.mean(db))


def chamfer_bruteforce(p, q, power: int = 2) -> float:
    """O(n*m) reference implementation used to cross-check the tree version."""
    if power not in (1, 2):
        raise ValueError("power must be 1 or 2")
    a = _as_cloud(p)
    b = _as_cloud(q)
    d = cdist(a, b)
    da = d.min(axis=1)
    db = d.min(axis=0)
    if power == 2:
        da = da * da
        db = db * db
    return float(np.mean(da) + np.mean(db))
