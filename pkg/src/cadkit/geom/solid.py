"""Extruded solids and CSG composition with exact membership.

A Solid is a binary tree whose leaves are extrusions (a 2D Profile swept
along its plane normal).  Leaf signed distance is exact for the product
topology (profile x z-slab), which makes tolerance-based surface tests and
the two-sided regularized membership probes reliable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import CadkitError
from ..quant import dequant
from ..cadcode.nodes import Extent, ExtrudeParams, Operation, Program, sketch_groups
from .sketch import Profile, evaluate_sketch, profile_bbox, signed_distance

_BTOL = 1e-9          # boundary tolerance for membership flags
CLASSIFY_EPS = 1e-7   # three-way classification band


class EmptyResultError(CadkitError):
    """The composed solid has no interior."""


@dataclass(frozen=True)
class PlaneFrame:
    """Sketch plane placement: orthonormal (u, v, n) + origin + in-plane scale.

    n is the spherical direction (theta, phi); u is the reference direction
    (derivative of n w.r.t. theta) rotated about n by gamma; v = n x u.
    Extrusion z runs along n in absolute units; sketch coordinates are
    multiplied by scale.
    """

    origin: tuple[float, float, float]
    scale: float
    u: tuple[float, float, float]
    v: tuple[float, float, float]
    n: tuple[float, float, float]

    @staticmethod
    def from_angles(theta, phi, gamma, origin, scale) -> "PlaneFrame":
        st, ct = math.sin(theta), math.cos(theta)
        sp, cp = math.sin(phi), math.cos(phi)
        n = np.array([st * cp, st * sp, ct])
        r = np.array([ct * cp, ct * sp, -st])  # d n / d theta
        w = np.cross(n, r)
        cg, sg = math.cos(gamma), math.sin(gamma)
        u = r * cg + w * sg
        v = np.cross(n, u)
        return PlaneFrame(
            origin=tuple(float(x) for x in origin),
            scale=float(scale),
            u=tuple(u), v=tuple(v), n=tuple(n),
        )

    def to_world(self, abz) -> np.ndarray:
        """(M, 3) local (a, b, z) -> world; a, b scaled, z absolute."""
        abz = np.atleast_2d(np.asarray(abz, dtype=np.float64))
        basis = np.array([self.u, self.v, self.n])  # rows
        scaled = abz * np.array([self.scale, self.scale, 1.0])
        return scaled @ basis + np.asarray(self.origin)

    def to_local(self, pts) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
        rel = pts - np.asarray(self.origin)
        basis = np.array([self.u, self.v, self.n])
        loc = rel @ basis.T
        loc[:, :2] /= self.scale
        return loc


def extent_interval(extent: Extent, e1: float, e2: float) -> tuple[float, float]:
    """World-space z-interval of an extrusion, sorted."""
    if extent is Extent.ONE_SIDED:
        z0, z1 = 0.0, e1
    elif extent is Extent.SYMMETRIC:
        z0, z1 = -e1, e1
    else:
        z0, z1 = -e2, e1
    return (z0, z1) if z0 <= z1 else (z1, z0)


@dataclass(frozen=True)
class Extrusion:
    profile: Profile
    frame: PlaneFrame
    z0: float
    z1: float

    def __post_init__(self):
        if self.z1 - self.z0 < 1e-12:
            raise CadkitError("extrusion has zero extent")
        if self.frame.scale < 1e-12:
            raise CadkitError("extrusion has zero scale")

    def signed_dist(self, pts) -> np.ndarray:
        loc = self.frame.to_local(pts)
        s2 = signed_distance(self.profile, loc[:, :2]) * self.frame.scale
        sz = np.minimum(loc[:, 2] - self.z0, self.z1 - loc[:, 2])
        both_in = (s2 > 0.0) & (sz > 0.0)
        inside_val = np.minimum(s2, sz)
        out2 = np.minimum(s2, 0.0)
        outz = np.minimum(sz, 0.0)
        outside_val = -np.hypot(out2, outz)
        return np.where(both_in, inside_val, outside_val)

    def bbox(self):
        x0, y0, x1, y1 = profile_bbox(self.profile)
        corners = [
            (a, b, z)
            for a in (x0, x1)
            for b in (y0, y1)
            for z in (self.z0, self.z1)
        ]
        w = self.frame.to_world(np.array(corners))
        return w.min(axis=0), w.max(axis=0)


@dataclass(frozen=True)
class Solid:
    """CSG node: a leaf extrusion, or (op, left, right)."""

    leaf: Extrusion | None = None
    op: str | None = None          # "union" | "difference" | "intersection"
    left: "Solid | None" = None
    right: "Solid | None" = None

    @staticmethod
    def from_leaf(extrusion: Extrusion) -> "Solid":
        return Solid(leaf=extrusion)

    @staticmethod
    def combine(op: str, left: "Solid", right: "Solid") -> "Solid":
        if op not in ("union", "difference", "intersection"):
            raise CadkitError(f"unknown boolean op {op!r}")
        return Solid(op=op, left=left, right=right)

    def leaves(self) -> list[Extrusion]:
        if self.leaf is not None:
            return [self.leaf]
        return self.left.leaves() + self.right.leaves()

    def bbox(self):
        mins, maxs = zip(*(leaf.bbox() for leaf in self.leaves()))
        return np.min(mins, axis=0), np.max(maxs, axis=0)

    # -- membership -------------------------------------------------------

    def classify(self, pts) -> np.ndarray:
        """+1 inside / 0 on boundary (within eps) / -1 outside."""
        if self.leaf is not None:
            s = self.leaf.signed_dist(pts)
            out = np.zeros(s.shape, dtype=np.int8)
            out[s > CLASSIFY_EPS] = 1
            out[s < -CLASSIFY_EPS] = -1
            return out
        a = self.left.classify(pts)
        b = self.right.classify(pts)
        out = np.zeros(a.shape, dtype=np.int8)
        if self.op == "union":
            out[(a == 1) | (b == 1)] = 1
            out[(a == -1) & (b == -1)] = -1
        elif self.op == "intersection":
            out[(a == 1) & (b == 1)] = 1
            out[(a == -1) | (b == -1)] = -1
        else:
            out[(a == 1) & (b == -1)] = 1
            out[(a == -1) | (b == 1)] = -1
        return out

    def contains(self, pts) -> np.ndarray:
        return self.classify(pts) == 1

    def membership_flags(self, pts) -> tuple[np.ndarray, np.ndarray]:
        """Regularized (open, closed) interior flags.

        open: point is in the open interior; closed: point is in the closure
        of the interior.  Difference uses (open_a & ~closed_b, closed_a &
        ~open_b) so coincident faces erase correctly.
        """
        if self.leaf is not None:
            s = self.leaf.signed_dist(pts)
            return s > _BTOL, s > -_BTOL
        oa, ca = self.left.membership_flags(pts)
        ob, cb = self.right.membership_flags(pts)
        if self.op == "union":
            return oa | ob, ca | cb
        if self.op == "intersection":
            return oa & ob, ca & cb
        return oa & ~cb, ca & ~ob


def flip_survives(solid: Solid, pts, normals, eps: float) -> np.ndarray:
    """Does the surface element at p with unit normal n bound material?

    True where exactly one side of the element carries interior: material
    closed on one side and open-interior absent on the other (in either
    orientation).  This keeps faces that still bound the result and drops
    surface buried inside material or floating in void, including coincident
    face pairs erased by regularized booleans.
    """
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    normals = np.atleast_2d(np.asarray(normals, dtype=np.float64))
    lo = pts - eps * normals
    hi = pts + eps * normals
    open_lo, closed_lo = solid.membership_flags(lo)
    open_hi, closed_hi = solid.membership_flags(hi)
    return (closed_lo & ~open_hi) | (closed_hi & ~open_lo)


# ---------------------------------------------------------------------------
# program execution

_OP_NAMES = {
    Operation.JOIN: "union",
    Operation.CUT: "difference",
    Operation.INTERSECT: "intersection",
}


def leaf_from_extrude(program: Program, ext: ExtrudeParams) -> Extrusion:
    profile = evaluate_sketch(program, ext.sketch)
    theta = dequant("theta", ext.orientation[0])
    phi = dequant("phi", ext.orientation[1])
    gamma = dequant("gamma", ext.orientation[2])
    origin = tuple(dequant("origin", q) for q in ext.origin)
    scale = dequant("scale", ext.scale)
    e1 = dequant("distance", ext.distances[0])
    e2 = dequant("distance", ext.distances[1])
    frame = PlaneFrame.from_angles(theta, phi, gamma, origin, scale)
    z0, z1 = extent_interval(ext.extent, e1, e2)
    return Extrusion(profile=profile, frame=frame, z0=z0, z1=z1)


def _is_nonempty_by_construction(ops) -> bool:
    # unions of non-degenerate leaves cannot be empty
    return all(op in (Operation.NEW_BODY, Operation.JOIN) for op in ops)


def _check_nonempty(solid: Solid, n: int = 8192, seed: int = 0x5EED):
    lo, hi = solid.bbox()
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = rng.uniform(lo, hi, size=(n, 3))
    if not solid.contains(pts).any():
        raise EmptyResultError("composed solid has no interior")


def execute(program: Program) -> Solid:
    """Evaluate a program into its CSG solid.

    Extrudes fold left in statement order: NewBody and Join union with the
    accumulator, Cut subtracts, Intersect intersects.  EmptyResultError when
    the result has no interior (checked by membership sampling whenever a
    Cut or Intersect is present).
    """
    groups = sketch_groups(program)
    extrudes = [g["extrude"] for g in groups.values() if g["extrude"] is not None]
    if not extrudes:
        raise EmptyResultError("program has no extrusions")
    solid = None
    ops = []
    for ext in extrudes:
        leaf = Solid.from_leaf(leaf_from_extrude(program, ext))
        ops.append(ext.operation)
        if solid is None:
            solid = leaf
        else:
            name = _OP_NAMES.get(ext.operation, "union")
            solid = Solid.combine(name, solid, leaf)
    if not _is_nonempty_by_construction(ops):
        _check_nonempty(solid)
    return solid


def contains(solid: Solid, point) -> str:
    """Three-way membership of one point: 'inside' | 'outside' | 'boundary'."""
    c = int(solid.classify(np.asarray(point, dtype=np.float64)[None, :])[0])
    return {1: "inside", 0: "boundary", -1: "outside"}[c]


def mc_volume(solid: Solid, n: int = 1_000_000, seed: int = 0) -> float:
    """Monte-Carlo volume over the solid's bounding box."""
    lo, hi = solid.bbox()
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = rng.uniform(lo, hi, size=(n, 3))
    frac = float(np.count_nonzero(solid.contains(pts))) / n
    return frac * float(np.prod(hi - lo))
