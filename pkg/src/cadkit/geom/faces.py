"""B-rep faces of extruded solids: caps and swept side walls.

Each leaf extrusion contributes two planar caps plus one side face per
profile segment.  Faces carry their own (u, v) in [0,1]^2 parameterization,
world-space points/normals, membership of the (untrimmed) carrier surface,
boundary curves, and survival probing against the composite solid.

Booleans never split or merge faces here; trimming shows up as per-sample
masks and as faces dropped when no interior probe survives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .sketch import (
    ArcSeg,
    CircleSeg,
    LineSeg,
    Profile,
    profile_area,
    profile_bbox,
    segment_length,
    signed_distance,
)
from .solid import Extrusion, Solid, flip_survives

SURFACE_TOL = 1e-7


# ---------------------------------------------------------------------------
# world-space curves (face boundaries, graph edges)

@dataclass(frozen=True)
class Line3D:
    p0: tuple[float, float, float]
    p1: tuple[float, float, float]

    def points(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.float64)[:, None]
        p0 = np.asarray(self.p0)
        p1 = np.asarray(self.p1)
        return p0 + ts * (p1 - p0)

    def tangents(self, ts) -> np.ndarray:
        d = np.asarray(self.p1) - np.asarray(self.p0)
        n = np.linalg.norm(d)
        t = d / n if n > 0 else d
        return np.broadcast_to(t, (len(np.atleast_1d(ts)), 3)).copy()

    def length(self) -> float:
        return float(np.linalg.norm(np.asarray(self.p1) - np.asarray(self.p0)))

    def subcurve(self, t0: float, t1: float) -> "Line3D":
        pts = self.points(np.array([t0, t1]))
        return Line3D(tuple(pts[0]), tuple(pts[1]))


@dataclass(frozen=True)
class Arc3D:
    """Circular arc: center + radius in the (axis_u, axis_v) plane.

    point(t) = center + r*(cos(a(t))*u + sin(a(t))*v), a(t) = ang0 + t*(ang1-ang0).
    A full circle uses ang1 = ang0 + 2*pi.
    """

    center: tuple[float, float, float]
    axis_u: tuple[float, float, float]
    axis_v: tuple[float, float, float]
    radius: float
    ang0: float
    ang1: float

    def points(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.float64)
        a = self.ang0 + ts * (self.ang1 - self.ang0)
        u = np.asarray(self.axis_u)
        v = np.asarray(self.axis_v)
        return (
            np.asarray(self.center)
            + self.radius * (np.cos(a)[:, None] * u + np.sin(a)[:, None] * v)
        )

    def tangents(self, ts) -> np.ndarray:
        ts = np.asarray(ts, dtype=np.float64)
        a = self.ang0 + ts * (self.ang1 - self.ang0)
        u = np.asarray(self.axis_u)
        v = np.asarray(self.axis_v)
        sgn = 1.0 if self.ang1 >= self.ang0 else -1.0
        t = sgn * (-np.sin(a)[:, None] * u + np.cos(a)[:, None] * v)
        return t / np.linalg.norm(t, axis=1, keepdims=True)

    def length(self) -> float:
        return self.radius * abs(self.ang1 - self.ang0)

    def subcurve(self, t0: float, t1: float) -> "Arc3D":
        a0 = self.ang0 + t0 * (self.ang1 - self.ang0)
        a1 = self.ang0 + t1 * (self.ang1 - self.ang0)
        return Arc3D(self.center, self.axis_u, self.axis_v, self.radius, a0, a1)


Curve3D = Line3D | Arc3D


# ---------------------------------------------------------------------------
# faces

def _grid_uv(r: int) -> np.ndarray:
    """(r*r, 2) inclusive-endpoint parameter grid, row-major over (u, v)."""
    s = np.linspace(0.0, 1.0, r)
    uu, vv = np.meshgrid(s, s, indexing="ij")
    return np.stack([uu.ravel(), vv.ravel()], axis=1)


def _cell_center_uv(r: int) -> np.ndarray:
    s = (np.arange(r) + 0.5) / r
    uu, vv = np.meshgrid(s, s, indexing="ij")
    return np.stack([uu.ravel(), vv.ravel()], axis=1)


@dataclass(frozen=True)
class CapFace:
    """Planar end face of an extrusion, parameterized over the profile bbox."""

    ext: Extrusion
    leaf_index: int
    top: bool
    bbox2d: tuple = field(default=None)

    def __post_init__(self):
        if self.bbox2d is None:
            object.__setattr__(self, "bbox2d", profile_bbox(self.ext.profile))

    @property
    def kind(self) -> str:
        return "cap_top" if self.top else "cap_bottom"

    @property
    def sort_key(self):
        return (self.leaf_index, 0 if not self.top else 1, -1, -1)

    @property
    def _z(self) -> float:
        return self.ext.z1 if self.top else self.ext.z0

    def _world_normal(self) -> np.ndarray:
        n = np.asarray(self.ext.frame.n)
        return n if self.top else -n

    def _ab(self, uv) -> np.ndarray:
        uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
        x0, y0, x1, y1 = self.bbox2d
        a = x0 + uv[:, 0] * (x1 - x0)
        b = y0 + uv[:, 1] * (y1 - y0)
        return np.stack([a, b], axis=1)

    def point(self, uv) -> np.ndarray:
        ab = self._ab(uv)
        abz = np.concatenate([ab, np.full((len(ab), 1), self._z)], axis=1)
        return self.ext.frame.to_world(abz)

    def normal(self, uv) -> np.ndarray:
        uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
        return np.broadcast_to(self._world_normal(), (len(uv), 3)).copy()

    def region_mask(self, uv, tol: float = SURFACE_TOL) -> np.ndarray:
        sd = signed_distance(self.ext.profile, self._ab(uv))
        return sd * self.ext.frame.scale >= -tol

    def on_carrier(self, pts, tol: float = SURFACE_TOL) -> np.ndarray:
        loc = self.ext.frame.to_local(pts)
        return np.abs(loc[:, 2] - self._z) <= tol

    def uv_of_points(self, pts) -> np.ndarray:
        loc = self.ext.frame.to_local(pts)
        x0, y0, x1, y1 = self.bbox2d
        u = (loc[:, 0] - x0) / (x1 - x0)
        v = (loc[:, 1] - y0) / (y1 - y0)
        return np.stack([u, v], axis=1)

    def area(self) -> float:
        return profile_area(self.ext.profile) * self.ext.frame.scale ** 2

    def _curve_of_segment(self, seg) -> Curve3D:
        frame = self.ext.frame
        z = self._z
        if isinstance(seg, LineSeg):
            p = frame.to_world(
                np.array([[*seg.start, z], [*seg.end, z]])
            )
            return Line3D(tuple(p[0]), tuple(p[1]))
        center = frame.to_world(np.array([[seg.center[0], seg.center[1], z]]))[0]
        r_w = seg.radius * frame.scale
        if isinstance(seg, CircleSeg):
            return Arc3D(tuple(center), frame.u, frame.v, r_w, 0.0, 2.0 * math.pi)
        d = seg.sweep if seg.ccw else -seg.sweep
        return Arc3D(tuple(center), frame.u, frame.v, r_w, seg.ang0, seg.ang0 + d)

    def boundary_curves(self) -> list:
        return [
            self._curve_of_segment(seg)
            for loop in self.ext.profile.loops
            for seg in loop
        ]

    def _interior_ab(self, margin: float) -> np.ndarray:
        """2D probe points strictly inside the profile by `margin` (local units)."""
        cand = []
        for r in (8, 24):
            x0, y0, x1, y1 = self.bbox2d
            uv = _cell_center_uv(r)
            ab = self._ab(uv)
            sd = signed_distance(self.ext.profile, ab)
            keep = ab[sd > margin]
            if len(keep):
                cand.append(keep)
                break
        if not cand:
            # thin regions: offset segment midpoints inward
            pts = []
            for loop in self.ext.profile.loops:
                for seg in loop:
                    for t in (0.25, 0.5, 0.75):
                        p, nrm = _seg_point_normal_2d(seg, t)
                        for s in (1.0, -1.0):
                            q = p + s * 2.0 * margin * nrm
                            if signed_distance(self.ext.profile, q[None, :])[0] > margin / 2:
                                pts.append(q)
            if pts:
                cand.append(np.array(pts))
        return np.concatenate(cand) if cand else np.empty((0, 2))

    def survival_points(self, margin_world: float) -> np.ndarray:
        ab = self._interior_ab(margin_world / self.ext.frame.scale)
        if len(ab) == 0:
            return np.empty((0, 3))
        abz = np.concatenate([ab, np.full((len(ab), 1), self._z)], axis=1)
        return self.ext.frame.to_world(abz)


def _seg_point_normal_2d(seg, t: float):
    """Point and unit geometric normal of a 2D segment at parameter t."""
    if isinstance(seg, LineSeg):
        p = np.array(
            [
                seg.start[0] + t * (seg.end[0] - seg.start[0]),
                seg.start[1] + t * (seg.end[1] - seg.start[1]),
            ]
        )
        dx = seg.end[0] - seg.start[0]
        dy = seg.end[1] - seg.start[1]
        L = math.hypot(dx, dy)
        return p, np.array([dy / L, -dx / L])
    if isinstance(seg, CircleSeg):
        a = 2.0 * math.pi * t
        rad = np.array([math.cos(a), math.sin(a)])
        return np.asarray(seg.center) + seg.radius * rad, rad
    a = seg.angle_at(t)
    rad = np.array([math.cos(a), math.sin(a)])
    return np.asarray(seg.center) + seg.radius * rad, rad


@dataclass(frozen=True)
class SideFace:
    """Swept wall of one profile segment: u along the segment, v along z."""

    ext: Extrusion
    leaf_index: int
    loop_index: int
    seg_index: int
    seg: object
    normal_sign: float = field(default=None)

    def __post_init__(self):
        if self.normal_sign is None:
            object.__setattr__(self, "normal_sign", self._probe_normal_sign())

    def _probe_normal_sign(self) -> float:
        p, nrm = _seg_point_normal_2d(self.seg, 0.5)
        for delta in (1e-4, 1e-5, 1e-6):
            probes = np.array([p + delta * nrm, p - delta * nrm])
            sd = signed_distance(self.ext.profile, probes)
            if sd[0] < sd[1]:
                return 1.0
            if sd[1] < sd[0]:
                return -1.0
        return 1.0

    @property
    def kind(self) -> str:
        return "side"

    @property
    def sort_key(self):
        return (self.leaf_index, 2, self.loop_index, self.seg_index)

    def _pn2d(self, u) -> tuple[np.ndarray, np.ndarray]:
        """Vectorized 2D point and signed outward normal along the segment."""
        u = np.asarray(u, dtype=np.float64)
        seg = self.seg
        if isinstance(seg, LineSeg):
            p = np.stack(
                [
                    seg.start[0] + u * (seg.end[0] - seg.start[0]),
                    seg.start[1] + u * (seg.end[1] - seg.start[1]),
                ],
                axis=1,
            )
            dx = seg.end[0] - seg.start[0]
            dy = seg.end[1] - seg.start[1]
            L = math.hypot(dx, dy)
            n = np.broadcast_to(np.array([dy / L, -dx / L]), p.shape).copy()
        elif isinstance(seg, CircleSeg):
            a = 2.0 * math.pi * u
            n = np.stack([np.cos(a), np.sin(a)], axis=1)
            p = np.asarray(seg.center) + seg.radius * n
        else:
            a = seg.angle_at(u)
            n = np.stack([np.cos(a), np.sin(a)], axis=1)
            p = np.asarray(seg.center) + seg.radius * n
        return p, self.normal_sign * n

    def point(self, uv) -> np.ndarray:
        uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
        p2, _ = self._pn2d(uv[:, 0])
        z = self.ext.z0 + uv[:, 1] * (self.ext.z1 - self.ext.z0)
        abz = np.concatenate([p2, z[:, None]], axis=1)
        return self.ext.frame.to_world(abz)

    def normal(self, uv) -> np.ndarray:
        uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
        _, n2 = self._pn2d(uv[:, 0])
        fu = np.asarray(self.ext.frame.u)
        fv = np.asarray(self.ext.frame.v)
        return n2[:, 0:1] * fu + n2[:, 1:2] * fv

    def region_mask(self, uv, tol: float = SURFACE_TOL) -> np.ndarray:
        uv = np.atleast_2d(np.asarray(uv, dtype=np.float64))
        pad = tol  # parameter-space pad is generous; carrier test is the gate
        return (
            (uv[:, 0] >= -pad)
            & (uv[:, 0] <= 1 + pad)
            & (uv[:, 1] >= -pad)
            & (uv[:, 1] <= 1 + pad)
        )

    def on_carrier(self, pts, tol: float = SURFACE_TOL) -> np.ndarray:
        loc = self.ext.frame.to_local(pts)
        scale = self.ext.frame.scale
        seg = self.seg
        if isinstance(seg, LineSeg):
            dx = seg.end[0] - seg.start[0]
            dy = seg.end[1] - seg.start[1]
            L = math.hypot(dx, dy)
            nx, ny = dy / L, -dx / L
            d = (loc[:, 0] - seg.start[0]) * nx + (loc[:, 1] - seg.start[1]) * ny
            return np.abs(d) * scale <= tol
        cx, cy = seg.center
        rad = np.hypot(loc[:, 0] - cx, loc[:, 1] - cy)
        return np.abs(rad - seg.radius) * scale <= tol

    def uv_of_points(self, pts) -> np.ndarray:
        loc = self.ext.frame.to_local(pts)
        seg = self.seg
        if isinstance(seg, LineSeg):
            dx = seg.end[0] - seg.start[0]
            dy = seg.end[1] - seg.start[1]
            L2 = dx * dx + dy * dy
            u = ((loc[:, 0] - seg.start[0]) * dx + (loc[:, 1] - seg.start[1]) * dy) / L2
        elif isinstance(seg, CircleSeg):
            ang = np.arctan2(loc[:, 1] - seg.center[1], loc[:, 0] - seg.center[0])
            u = np.mod(ang, 2.0 * math.pi) / (2.0 * math.pi)
        else:
            ang = np.arctan2(loc[:, 1] - seg.center[1], loc[:, 0] - seg.center[0])
            dirn = 1.0 if seg.ccw else -1.0
            rel = np.mod((ang - seg.ang0) * dirn, 2.0 * math.pi)
            # points a hair before the arc start wrap to ~2*pi; fold them back
            rel = np.where(rel > seg.sweep + 1e-9, rel - 2.0 * math.pi, rel)
            u = rel / seg.sweep
        v = (loc[:, 2] - self.ext.z0) / (self.ext.z1 - self.ext.z0)
        return np.stack([u, v], axis=1)

    def area(self) -> float:
        return (
            segment_length(self.seg)
            * self.ext.frame.scale
            * (self.ext.z1 - self.ext.z0)
        )

    def boundary_curves(self) -> list:
        frame = self.ext.frame
        z0, z1 = self.ext.z0, self.ext.z1
        seg = self.seg
        curves = []
        if isinstance(seg, LineSeg):
            for z in (z0, z1):
                p = frame.to_world(np.array([[*seg.start, z], [*seg.end, z]]))
                curves.append(Line3D(tuple(p[0]), tuple(p[1])))
            for pt2 in (seg.start, seg.end):
                p = frame.to_world(np.array([[*pt2, z0], [*pt2, z1]]))
                curves.append(Line3D(tuple(p[0]), tuple(p[1])))
            return curves
        r_w = seg.radius * frame.scale
        if isinstance(seg, CircleSeg):
            for z in (z0, z1):
                c = frame.to_world(np.array([[seg.center[0], seg.center[1], z]]))[0]
                curves.append(
                    Arc3D(tuple(c), frame.u, frame.v, r_w, 0.0, 2.0 * math.pi)
                )
            return curves
        d = seg.sweep if seg.ccw else -seg.sweep
        for z in (z0, z1):
            c = frame.to_world(np.array([[seg.center[0], seg.center[1], z]]))[0]
            curves.append(
                Arc3D(tuple(c), frame.u, frame.v, r_w, seg.ang0, seg.ang0 + d)
            )
        for pt2 in (seg.start, seg.end):
            p = frame.to_world(np.array([[*pt2, z0], [*pt2, z1]]))
            curves.append(Line3D(tuple(p[0]), tuple(p[1])))
        return curves

    def cross_section_curve(self, v: float):
        """The face's u-curve at height parameter v (v in [0,1])."""
        frame = self.ext.frame
        z = self.ext.z0 + v * (self.ext.z1 - self.ext.z0)
        seg = self.seg
        if isinstance(seg, LineSeg):
            p = frame.to_world(np.array([[*seg.start, z], [*seg.end, z]]))
            return Line3D(tuple(p[0]), tuple(p[1]))
        c = frame.to_world(np.array([[seg.center[0], seg.center[1], z]]))[0]
        r_w = seg.radius * frame.scale
        if isinstance(seg, CircleSeg):
            return Arc3D(tuple(c), frame.u, frame.v, r_w, 0.0, 2.0 * math.pi)
        d = seg.sweep if seg.ccw else -seg.sweep
        return Arc3D(tuple(c), frame.u, frame.v, r_w, seg.ang0, seg.ang0 + d)

    def survival_points(self, margin_world: float) -> np.ndarray:
        del margin_world  # side-face cell centers are interior by construction
        uv = _cell_center_uv(8)
        return self.point(uv)


Face = CapFace | SideFace


def leaf_faces(ext: Extrusion, leaf_index: int) -> list:
    """All candidate faces of one extrusion: bottom cap, top cap, side walls."""
    faces: list = [
        CapFace(ext=ext, leaf_index=leaf_index, top=False),
        CapFace(ext=ext, leaf_index=leaf_index, top=True),
    ]
    for li, loop in enumerate(ext.profile.loops):
        for si, seg in enumerate(loop):
            faces.append(
                SideFace(
                    ext=ext,
                    leaf_index=leaf_index,
                    loop_index=li,
                    seg_index=si,
                    seg=seg,
                )
            )
    return faces


def probe_epsilon(solid: Solid) -> float:
    lo, hi = solid.bbox()
    return 1e-5 * float(np.linalg.norm(hi - lo))


def face_survives(face: Face, solid: Solid, eps: float | None = None) -> bool:
    """Does any interior probe point of the face bound material in the solid?"""
    if eps is None:
        eps = probe_epsilon(solid)
    pts = face.survival_points(margin_world=2.0 * eps)
    if len(pts) == 0:
        return False
    uv = face.uv_of_points(pts)
    normals = face.normal(uv)
    return bool(flip_survives(solid, pts, normals, eps).any())
