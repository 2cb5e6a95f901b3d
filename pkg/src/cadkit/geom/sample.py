"""Boundary point sampling of composite solids and point-cloud utilities."""

from __future__ import annotations

import numpy as np

from ..errors import CadkitError
from .faces import CapFace, face_survives, leaf_faces, probe_epsilon
from .sketch import signed_distance
from .solid import Solid, flip_survives


class SamplingExhaustedError(CadkitError):
    """Boundary sampling acceptance rate collapsed (degenerate solid)."""


class ZeroExtentError(CadkitError):
    """Point cloud has no spatial extent."""


def _draw_weight(face) -> float:
    # world-area of the full parameter rectangle, so that param-uniform draws
    # followed by region rejection are area-uniform across faces
    if isinstance(face, CapFace):
        x0, y0, x1, y1 = face.bbox2d
        return (x1 - x0) * (y1 - y0) * face.ext.frame.scale ** 2
    return face.area()


def sample_surface(solid: Solid, n: int, seed: int) -> np.ndarray:
    """n area-uniform points on the boundary of the composite solid.

    Candidates are drawn area-uniformly on each leaf's faces and kept iff
    membership flips across an epsilon offset along the face normal, i.e. the
    point lies on the composite boundary.  Deterministic per (solid, n, seed).
    """
    if n <= 0:
        raise CadkitError("sample count must be positive")
    eps = probe_epsilon(solid)
    faces = [
        f
        for i, leaf in enumerate(solid.leaves())
        for f in leaf_faces(leaf, i)
    ]
    faces = [f for f in faces if face_survives(f, solid, eps)]
    if not faces:
        raise SamplingExhaustedError("no face of the solid survives probing")
    weights = np.array([_draw_weight(f) for f in faces])
    weights = weights / weights.sum()
    rng = np.random.Generator(np.random.PCG64(seed))
    out = []
    have = 0
    drawn = 0
    while have < n:
        batch = max(4096, 2 * (n - have))
        drawn += batch
        idx = rng.choice(len(faces), size=batch, p=weights)
        uv = rng.random((batch, 2))
        pts = np.empty((batch, 3))
        normals = np.empty((batch, 3))
        keep = np.ones(batch, dtype=bool)
        for fi in np.unique(idx):
            face = faces[fi]
            sel = idx == fi
            pts[sel] = face.point(uv[sel])
            normals[sel] = face.normal(uv[sel])
            if isinstance(face, CapFace):
                ab = face._ab(uv[sel])
                keep[sel] = signed_distance(face.ext.profile, ab) > 0.0
        keep &= flip_survives(solid, pts, normals, eps)
        accepted = pts[keep]
        if len(accepted):
            out.append(accepted)
            have += len(accepted)
        if drawn >= 100_000 and have / drawn < 1e-4:
            raise SamplingExhaustedError(
                f"acceptance rate {have}/{drawn} below 1e-4"
            )
    return np.concatenate(out)[:n]


def normalize(cloud: np.ndarray) -> np.ndarray:
    """Center the bounding box at the origin and scale its longest edge to 1."""
    cloud = np.asarray(cloud, dtype=np.float64)
    if cloud.size == 0:
        raise CadkitError("empty point cloud")
    lo = cloud.min(axis=0)
    hi = cloud.max(axis=0)
    longest = float((hi - lo).max())
    if longest < 1e-12:
        raise ZeroExtentError("all points coincide")
    center = (lo + hi) / 2.0
    return (cloud - center) / longest


def save_xyz(path, cloud: np.ndarray) -> None:
    cloud = np.asarray(cloud, dtype=np.float64)
    with open(path, "w", encoding="utf-8") as fh:
        for x, y, z in cloud:
            fh.write(f"{x:.9g} {y:.9g} {z:.9g}\n")


def load_xyz(path) -> np.ndarray:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise CadkitError(f"{path}: line {ln}: expected 3 numbers")
            try:
                rows.append([float(v) for v in parts])
            except ValueError:
                raise CadkitError(f"{path}: line {ln}: bad number") from None
    if not rows:
        raise CadkitError(f"{path}: empty point cloud")
    return np.array(rows, dtype=np.float64)
