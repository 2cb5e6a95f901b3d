"""2D sketch geometry: de-quantized profiles, membership, areas, intersection.

Profiles live in the sketch plane in de-quantized units.  Loops are closed
chains of line segments and circular arcs, or a single full circle.  Membership
uses the even-odd rule with y-monotone crossing counting; signed distance is
positive inside.

All point-batch functions take (M, 2) float arrays and are vectorized; the
million-probe Monte-Carlo oracles depend on that.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import CadkitError
from ..quant import dequant, step
from ..cadcode.nodes import Arc, Circle, Line, Program, sketch_groups

_TINY = 1e-12
_CONTACT_TOL = 1e-9


class OpenLoopError(CadkitError):
    """A segment chain does not return to its start point."""

    def __init__(self, message, loop_index=None):
        super().__init__(message)
        self.loop_index = loop_index


class DegenerateLoopError(CadkitError):
    """Zero-measure loop: zero-length segment, zero radius, or zero area."""

    def __init__(self, message, loop_index=None):
        super().__init__(message)
        self.loop_index = loop_index


class SelfIntersectionError(CadkitError):
    """Loop self-intersection, or two loops of one profile crossing."""

    def __init__(self, message, loop_index=None, between_loops=False):
        super().__init__(message)
        self.loop_index = loop_index
        self.between_loops = between_loops


@dataclass(frozen=True)
class LineSeg:
    start: tuple[float, float]
    end: tuple[float, float]


@dataclass(frozen=True)
class ArcSeg:
    start: tuple[float, float]
    end: tuple[float, float]
    center: tuple[float, float]
    radius: float
    ang0: float      # angle of start around center
    sweep: float     # positive traversal magnitude, (0, 2*pi)
    ccw: bool

    def angle_at(self, t):
        d = self.sweep if self.ccw else -self.sweep
        return self.ang0 + d * np.asarray(t)

    def point_at(self, t):
        a = self.angle_at(t)
        return np.stack(
            [self.center[0] + self.radius * np.cos(a),
             self.center[1] + self.radius * np.sin(a)],
            axis=-1,
        )


@dataclass(frozen=True)
class CircleSeg:
    center: tuple[float, float]
    radius: float


Segment = LineSeg | ArcSeg | CircleSeg
Loop = tuple


@dataclass(frozen=True)
class Profile:
    loops: tuple[Loop, ...]

    def __post_init__(self):
        object.__setattr__(self, "loops", tuple(tuple(lp) for lp in self.loops))


def arc_from_chord(start, end, sweep: float, ccw: bool) -> ArcSeg:
    """Arc through start->end subtending `sweep` radians, bulge set by ccw.

    Follows the DeepCAD convention: radius = (|chord|/2)/sin(sweep/2), center
    offset from the chord midpoint along the (sign-flipped for cw) clockwise
    chord normal by radius*cos(sweep/2).
    """
    sx, sy = start
    ex, ey = end
    dx, dy = ex - sx, ey - sy
    chord = math.hypot(dx, dy)
    if chord < _TINY:
        raise DegenerateLoopError("arc chord has zero length")
    if not _TINY < sweep < 2.0 * math.pi - _TINY:
        raise DegenerateLoopError(f"arc sweep {sweep:.6g} outside (0, 2*pi)")
    radius = (chord / 2.0) / math.sin(sweep / 2.0)
    vx, vy = dy / chord, -dx / chord
    if not ccw:
        vx, vy = -vx, -vy
    mx, my = (sx + ex) / 2.0, (sy + ey) / 2.0
    off = radius * math.cos(sweep / 2.0)
    cx, cy = mx - vx * off, my - vy * off
    ang0 = math.atan2(sy - cy, sx - cx)
    return ArcSeg(
        start=(sx, sy), end=(ex, ey), center=(cx, cy),
        radius=radius, ang0=ang0, sweep=sweep, ccw=ccw,
    )


# ---------------------------------------------------------------------------
# membership

def _arc_monotone_pieces(arc: ArcSeg):
    """Split an arc's angular span at cos=0 so y is monotone per piece."""
    d = 1.0 if arc.ccw else -1.0
    a0 = arc.ang0
    a1 = a0 + d * arc.sweep
    lo, hi = (a0, a1) if a0 < a1 else (a1, a0)
    # critical angles pi/2 + k*pi strictly inside (lo, hi)
    k0 = math.ceil((lo - math.pi / 2.0) / math.pi + 1e-15)
    crits = []
    k = k0
    while True:
        a = math.pi / 2.0 + k * math.pi
        if a >= hi - 1e-15:
            break
        if a > lo + 1e-15:
            crits.append(a)
        k += 1
    if not arc.ccw:
        crits = crits[::-1]
    pieces = []
    prev = a0
    for a in crits + [a1]:
        if abs(a - prev) > 1e-14:
            pieces.append((prev, a))
        prev = a
    return pieces


def _crossings_line(seg: LineSeg, px, py):
    (x0, y0), (x1, y1) = seg.start, seg.end
    if y0 == y1:
        return np.zeros(px.shape, dtype=np.int64)
    ylo, yhi = (y0, y1) if y0 < y1 else (y1, y0)
    mask = (py >= ylo) & (py < yhi)
    t = (py - y0) / (y1 - y0)
    x = x0 + t * (x1 - x0)
    return (mask & (x > px)).astype(np.int64)


def _crossings_circle_piece(cx, cy, r, sign, px, py):
    mask = (py >= cy - r) & (py < cy + r)
    dy = py - cy
    x = cx + sign * np.sqrt(np.maximum(r * r - dy * dy, 0.0))
    return (mask & (x > px)).astype(np.int64)


def _crossings_arc(arc: ArcSeg, px, py):
    cx, cy = arc.center
    r = arc.radius
    total = np.zeros(px.shape, dtype=np.int64)
    for a0, a1 in _arc_monotone_pieces(arc):
        y0 = cy + r * math.sin(a0)
        y1 = cy + r * math.sin(a1)
        if y0 == y1:
            continue
        ylo, yhi = (y0, y1) if y0 < y1 else (y1, y0)
        sign = 1.0 if math.cos((a0 + a1) / 2.0) > 0.0 else -1.0
        mask = (py >= ylo) & (py < yhi)
        dy = py - cy
        x = cx + sign * np.sqrt(np.maximum(r * r - dy * dy, 0.0))
        total += (mask & (x > px)).astype(np.int64)
    return total


def _segment_crossings(seg, px, py):
    if isinstance(seg, LineSeg):
        return _crossings_line(seg, px, py)
    if isinstance(seg, ArcSeg):
        return _crossings_arc(seg, px, py)
    cx, cy = seg.center
    r = seg.radius
    return _crossings_circle_piece(cx, cy, r, 1.0, px, py) + _crossings_circle_piece(
        cx, cy, r, -1.0, px, py
    )


def _segment_distance(seg, px, py):
    if isinstance(seg, LineSeg):
        (x0, y0), (x1, y1) = seg.start, seg.end
        dx, dy = x1 - x0, y1 - y0
        L2 = dx * dx + dy * dy
        if L2 < _TINY * _TINY:
            return np.hypot(px - x0, py - y0)
        t = np.clip(((px - x0) * dx + (py - y0) * dy) / L2, 0.0, 1.0)
        return np.hypot(px - (x0 + t * dx), py - (y0 + t * dy))
    if isinstance(seg, ArcSeg):
        cx, cy = seg.center
        vx, vy = px - cx, py - cy
        d = np.hypot(vx, vy)
        ang = np.arctan2(vy, vx)
        dirn = 1.0 if seg.ccw else -1.0
        rel = np.mod((ang - seg.ang0) * dirn, 2.0 * math.pi)
        in_span = rel <= seg.sweep
        radial = np.abs(d - seg.radius)
        d_ends = np.minimum(
            np.hypot(px - seg.start[0], py - seg.start[1]),
            np.hypot(px - seg.end[0], py - seg.end[1]),
        )
        return np.where(in_span, radial, d_ends)
    cx, cy = seg.center
    return np.abs(np.hypot(px - cx, py - cy) - seg.radius)


def signed_distance(profile: Profile, pts) -> np.ndarray:
    """Signed distance to the profile boundary: positive inside (even-odd)."""
    pts = np.atleast_2d(np.asarray(pts, dtype=np.float64))
    px, py = pts[:, 0], pts[:, 1]
    crossings = np.zeros(px.shape, dtype=np.int64)
    dist = np.full(px.shape, np.inf)
    for loop in profile.loops:
        for seg in loop:
            crossings += _segment_crossings(seg, px, py)
            dist = np.minimum(dist, _segment_distance(seg, px, py))
    inside = (crossings % 2) == 1
    return np.where(inside, dist, -dist)


def contains_2d(profile: Profile, pts) -> np.ndarray:
    """Strict even-odd membership (boundary points land on either side)."""
    return signed_distance(profile, pts) > 0.0


# ---------------------------------------------------------------------------
# measures

def loop_signed_area(loop) -> float:
    if len(loop) == 1 and isinstance(loop[0], CircleSeg):
        return math.pi * loop[0].radius ** 2
    total = 0.0
    for seg in loop:
        if isinstance(seg, LineSeg):
            (x0, y0), (x1, y1) = seg.start, seg.end
            total += (x0 * y1 - x1 * y0) / 2.0
        elif isinstance(seg, ArcSeg):
            (x0, y0), (x1, y1) = seg.start, seg.end
            total += (x0 * y1 - x1 * y0) / 2.0
            bulge = seg.radius ** 2 / 2.0 * (seg.sweep - math.sin(seg.sweep))
            total += bulge if seg.ccw else -bulge
    return total


def _loop_rep_point(loop):
    seg = loop[0]
    if isinstance(seg, CircleSeg):
        return (seg.center[0] + seg.radius, seg.center[1])
    return seg.start


def _loop_crossings(loop, px, py):
    total = np.zeros(px.shape, dtype=np.int64)
    for seg in loop:
        total += _segment_crossings(seg, px, py)
    return total


def profile_area(profile: Profile) -> float:
    """Even-odd measure: outer loops add, nested loops alternate sign."""
    total = 0.0
    for i, loop in enumerate(profile.loops):
        rep = _loop_rep_point(loop)
        px = np.array([rep[0]])
        py = np.array([rep[1]])
        depth = 0
        for j, other in enumerate(profile.loops):
            if j == i:
                continue
            if int(_loop_crossings(other, px, py)[0]) % 2 == 1:
                depth += 1
        total += abs(loop_signed_area(loop)) * (-1.0) ** depth
    return total


def _segment_bbox(seg):
    if isinstance(seg, LineSeg):
        xs = (seg.start[0], seg.end[0])
        ys = (seg.start[1], seg.end[1])
        return min(xs), min(ys), max(xs), max(ys)
    if isinstance(seg, CircleSeg):
        cx, cy = seg.center
        r = seg.radius
        return cx - r, cy - r, cx + r, cy + r
    cx, cy = seg.center
    r = seg.radius
    xs = [seg.start[0], seg.end[0]]
    ys = [seg.start[1], seg.end[1]]
    dirn = 1.0 if seg.ccw else -1.0
    for k, (ex, ey) in enumerate([(1, 0), (0, 1), (-1, 0), (0, -1)]):
        a = k * math.pi / 2.0
        rel = ((a - seg.ang0) * dirn) % (2.0 * math.pi)
        if rel <= seg.sweep:
            xs.append(cx + r * ex)
            ys.append(cy + r * ey)
    return min(xs), min(ys), max(xs), max(ys)


def profile_bbox(profile: Profile):
    """(xmin, ymin, xmax, ymax) over all loops."""
    boxes = [_segment_bbox(s) for loop in profile.loops for s in loop]
    xs0, ys0, xs1, ys1 = zip(*boxes)
    return min(xs0), min(ys0), max(xs1), max(ys1)


def segment_length(seg) -> float:
    if isinstance(seg, LineSeg):
        return math.hypot(seg.end[0] - seg.start[0], seg.end[1] - seg.start[1])
    if isinstance(seg, ArcSeg):
        return seg.radius * seg.sweep
    return 2.0 * math.pi * seg.radius


# ---------------------------------------------------------------------------
# intersection tests

def _seg_param_points(seg):
    if isinstance(seg, LineSeg):
        return np.array([seg.start, seg.end])
    raise TypeError


def _line_line_contacts(a: LineSeg, b: LineSeg):
    ax, ay = a.start
    dax, day = a.end[0] - ax, a.end[1] - ay
    bx, by = b.start
    dbx, dby = b.end[0] - bx, b.end[1] - by
    det = dax * dby - day * dbx
    if abs(det) > 1e-14:
        t = ((bx - ax) * dby - (by - ay) * dbx) / det
        u = ((bx - ax) * day - (by - ay) * dax) / det
        eps = 1e-12
        if -eps <= t <= 1 + eps and -eps <= u <= 1 + eps:
            return [(ax + t * dax, ay + t * day)]
        return []
    # parallel: check collinear overlap
    cross = (bx - ax) * day - (by - ay) * dax
    la = math.hypot(dax, day)
    if la < _TINY or abs(cross) / la > _CONTACT_TOL:
        return []
    # project b endpoints onto a's parameter
    t0 = ((bx - ax) * dax + (by - ay) * day) / (la * la)
    t1 = ((b.end[0] - ax) * dax + (b.end[1] - ay) * day) / (la * la)
    lo, hi = max(0.0, min(t0, t1)), min(1.0, max(t0, t1))
    if hi - lo > _CONTACT_TOL / la:
        tm = (lo + hi) / 2.0
        return [(ax + tm * dax, ay + tm * day)]
    if hi >= lo:  # touch at a single point
        tm = (lo + hi) / 2.0
        return [(ax + tm * dax, ay + tm * day)]
    return []


def _on_arc(seg, px, py, tol=_CONTACT_TOL):
    """Is (px, py), assumed on the carrier circle, within the arc's span?"""
    if isinstance(seg, CircleSeg):
        return True
    ang = math.atan2(py - seg.center[1], px - seg.center[0])
    dirn = 1.0 if seg.ccw else -1.0
    rel = ((ang - seg.ang0) * dirn) % (2.0 * math.pi)
    ang_tol = tol / max(seg.radius, tol)
    return rel <= seg.sweep + ang_tol or rel >= 2.0 * math.pi - ang_tol


def _line_circle_contacts(line: LineSeg, center, radius, carrier):
    ax, ay = line.start
    dx, dy = line.end[0] - ax, line.end[1] - ay
    cx, cy = center
    fx, fy = ax - cx, ay - cy
    A = dx * dx + dy * dy
    if A < _TINY * _TINY:
        return []
    B = 2.0 * (fx * dx + fy * dy)
    C = fx * fx + fy * fy - radius * radius
    disc = B * B - 4.0 * A * C
    if disc < -_CONTACT_TOL:
        return []
    disc = max(disc, 0.0)
    out = []
    eps = _CONTACT_TOL / math.sqrt(A)
    for sgn in (1.0, -1.0):
        t = (-B + sgn * math.sqrt(disc)) / (2.0 * A)
        if -eps <= t <= 1 + eps:
            px, py = ax + t * dx, ay + t * dy
            if _on_arc(carrier, px, py):
                out.append((px, py))
    if disc == 0.0 and len(out) == 2:
        out = out[:1]
    return out


def _circle_circle_contacts(a, b):
    """Contacts of two carrier circles, filtered to both spans."""
    ax, ay = a.center
    bx, by = b.center
    ra, rb = a.radius, b.radius
    d = math.hypot(bx - ax, by - ay)
    if d < _TINY:
        if abs(ra - rb) < _CONTACT_TOL:
            # coincident carriers: spans overlap unless disjoint arcs; sample
            pts = []
            if isinstance(a, ArcSeg):
                for t in (0.0, 0.5, 1.0):
                    p = a.point_at(t)
                    if _on_arc(b, p[0], p[1]):
                        pts.append((float(p[0]), float(p[1])))
            else:
                pts.append((ax + ra, ay))
            return pts
        return []
    if d > ra + rb + _CONTACT_TOL or d < abs(ra - rb) - _CONTACT_TOL:
        return []
    # radical line
    t = (d * d + ra * ra - rb * rb) / (2.0 * d)
    h2 = ra * ra - t * t
    h = math.sqrt(max(h2, 0.0))
    ux, uy = (bx - ax) / d, (by - ay) / d
    mx, my = ax + t * ux, ay + t * uy
    cands = [(mx + h * -uy, my + h * ux)]
    if h > _TINY:
        cands.append((mx - h * -uy, my - h * ux))
    out = []
    for px, py in cands:
        if _on_arc(a, px, py) and _on_arc(b, px, py):
            out.append((px, py))
    return out


def _segment_contacts(a, b):
    a_line = isinstance(a, LineSeg)
    b_line = isinstance(b, LineSeg)
    if a_line and b_line:
        return _line_line_contacts(a, b)
    if a_line:
        return _line_circle_contacts(a, b.center, b.radius, b)
    if b_line:
        return _line_circle_contacts(b, a.center, a.radius, a)
    return _circle_circle_contacts(a, b)


def _seg_endpoints(seg):
    if isinstance(seg, CircleSeg):
        return []
    return [seg.start, seg.end]


def _shared_endpoints(a, b):
    shared = []
    for p in _seg_endpoints(a):
        for q in _seg_endpoints(b):
            if math.hypot(p[0] - q[0], p[1] - q[1]) <= _CONTACT_TOL:
                shared.append(p)
    return shared


def loop_self_intersects(loop) -> bool:
    m = len(loop)
    for i in range(m):
        for j in range(i + 1, m):
            adjacent = j == i + 1 or (i == 0 and j == m - 1)
            contacts = _segment_contacts(loop[i], loop[j])
            if not contacts:
                continue
            if not adjacent:
                return True
            shared = _shared_endpoints(loop[i], loop[j])
            for px, py in contacts:
                near_shared = any(
                    math.hypot(px - sx, py - sy) <= 10 * _CONTACT_TOL
                    for sx, sy in shared
                )
                if not near_shared:
                    return True
    return False


def loops_cross(loop_a, loop_b) -> bool:
    for sa in loop_a:
        for sb in loop_b:
            if _segment_contacts(sa, sb):
                return True
    return False


# ---------------------------------------------------------------------------
# profile construction

def _check_loop_geometry(loop, index):
    area = loop_signed_area(loop)
    if abs(area) < _TINY:
        raise DegenerateLoopError("loop has zero area", loop_index=index)
    if loop_self_intersects(loop):
        raise SelfIntersectionError("loop intersects itself", loop_index=index)


def _finish_profile(loops) -> Profile:
    for i, loop in enumerate(loops):
        _check_loop_geometry(loop, i)
    for i in range(len(loops)):
        for j in range(i + 1, len(loops)):
            if loops_cross(loops[i], loops[j]):
                raise SelfIntersectionError(
                    f"loops {i} and {j} cross", loop_index=j, between_loops=True
                )
    return Profile(tuple(tuple(lp) for lp in loops))


def profile_from_commands(command_loops) -> Profile:
    """De-quantize lists of geometric commands (one list per loop) to a Profile.

    Loops close by construction (each command's endpoint is the next command's
    start; the loop starts at the final command's endpoint), so OpenLoopError
    cannot arise here — only from explicit chains, see profile_from_chains.
    """
    loops = []
    for li, commands in enumerate(command_loops):
        if not commands:
            raise DegenerateLoopError("loop has no commands", loop_index=li)
        if isinstance(commands[0], Circle):
            c = commands[0]
            center = (dequant("coord", c.center[0]), dequant("coord", c.center[1]))
            radius = dequant("radius", c.radius)
            if radius < _TINY:
                raise DegenerateLoopError("circle radius is zero", loop_index=li)
            loops.append((CircleSeg(center, radius),))
            continue
        pts = []
        for cmd in commands:
            ex, ey = cmd.endpoint
            pts.append((dequant("coord", ex), dequant("coord", ey)))
        segs = []
        for i, cmd in enumerate(commands):
            start = pts[i - 1]  # i=0 wraps to the final endpoint: the loop start
            end = pts[i]
            if isinstance(cmd, Line):
                if math.hypot(end[0] - start[0], end[1] - start[1]) < _TINY:
                    raise DegenerateLoopError(
                        "zero-length line segment", loop_index=li
                    )
                segs.append(LineSeg(start, end))
            else:
                sweep = dequant("sweep", cmd.sweep)
                try:
                    segs.append(arc_from_chord(start, end, sweep, cmd.ccw))
                except DegenerateLoopError as e:
                    raise DegenerateLoopError(str(e), loop_index=li) from None
        loops.append(tuple(segs))
    return _finish_profile(loops)


def evaluate_sketch(program: Program, name: str) -> Profile:
    """De-quantize one sketch of a program into a plane-local Profile."""
    groups = sketch_groups(program)
    if name not in groups:
        raise CadkitError(f"program has no sketch named {name!r}")
    try:
        return profile_from_commands(groups[name]["loops"])
    except (DegenerateLoopError, SelfIntersectionError) as e:
        raise type(e)(
            f"sketch {name}: {e}",
            loop_index=e.loop_index,
            **(
                {"between_loops": e.between_loops}
                if isinstance(e, SelfIntersectionError)
                else {}
            ),
        ) from None


def profile_from_chains(chains, snap_tol: float | None = None) -> Profile:
    """Build a Profile from explicit segment chains, enforcing closure.

    Consecutive segments must meet within snap_tol (default: one quantization
    step of the coordinate grid); the final endpoint is snapped onto the loop
    start when within tolerance, else OpenLoopError.  This is the closure
    oracle for hand-built chains; program-derived loops close by construction.
    """
    if snap_tol is None:
        snap_tol = step("coord")
    loops = []
    for li, chain in enumerate(chains):
        chain = list(chain)
        if len(chain) == 1 and isinstance(chain[0], CircleSeg):
            loops.append(tuple(chain))
            continue
        for a, b in zip(chain, chain[1:]):
            gap = math.hypot(b.start[0] - a.end[0], b.start[1] - a.end[1])
            if gap > snap_tol:
                raise OpenLoopError(
                    f"chain break of {gap:.4g} between segments", loop_index=li
                )
        first = chain[0]
        last = chain[-1]
        gap = math.hypot(first.start[0] - last.end[0], first.start[1] - last.end[1])
        if gap > snap_tol:
            raise OpenLoopError(
                f"chain does not return to its start (gap {gap:.4g})", loop_index=li
            )
        if gap > 0.0:
            target = first.start
            if isinstance(last, LineSeg):
                last = LineSeg(last.start, target)
            else:
                last = arc_from_chord(last.start, target, last.sweep, last.ccw)
            chain[-1] = last
        loops.append(tuple(chain))
    return _finish_profile(loops)
