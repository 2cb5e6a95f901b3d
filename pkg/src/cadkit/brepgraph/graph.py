"""Face-adjacency graphs with UV sample grids, exported as tensor archives.

Nodes are the surviving faces of a composite solid; an edge exists exactly
where two faces share a boundary curve of positive length on the result.
Candidate curves come from face boundaries and carrier-surface intersections;
each candidate is verified by probing: points must lie on both carriers,
inside both parameter regions, and flip probes nudged into either face must
see material on exactly one side.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..archive import read_archive, write_archive
from ..errors import CadkitError
from ..geom.faces import (
    Arc3D,
    CapFace,
    Line3D,
    SideFace,
    face_survives,
    leaf_faces,
    probe_epsilon,
)
from ..geom.sketch import ArcSeg, CircleSeg, LineSeg
from ..geom.solid import EmptyResultError, Solid, flip_survives

DEFAULT_RESOLUTION = 10
_N_PROBE = 33            # samples per candidate curve during validation
_CARRIER_TOL = 1e-7


@dataclass(frozen=True)
class GraphEdge:
    i: int
    j: int
    curve: object          # Line3D | Arc3D covering the shared-curve range
    length: float


@dataclass
class FaceGraph:
    solid: Solid
    faces: list
    edges: list[GraphEdge]
    resolution: int | None = None
    face_grids: np.ndarray | None = field(default=None, repr=False)
    edge_grids: np.ndarray | None = field(default=None, repr=False)

    @property
    def n(self) -> int:
        return len(self.faces)

    def edge_index(self) -> np.ndarray:
        if not self.edges:
            return np.zeros((0, 2), dtype=np.int32)
        return np.array([[e.i, e.j] for e in self.edges], dtype=np.int32)

    def neighbors(self) -> list[list[int]]:
        adj: list[list[int]] = [[] for _ in range(self.n)]
        for e in self.edges:
            adj[e.i].append(e.j)
            adj[e.j].append(e.i)
        return adj

    def is_connected(self) -> bool:
        if self.n == 0:
            return False
        adj = self.neighbors()
        seen = {0}
        stack = [0]
        while stack:
            cur = stack.pop()
            for nb in adj[cur]:
                if nb not in seen:
                    seen.add(nb)
                    stack.append(nb)
        return len(seen) == self.n


def enumerate_faces(solid: Solid) -> list:
    """Surviving faces in deterministic (leaf, kind, loop, segment) order."""
    eps = probe_epsilon(solid)
    faces = [
        f
        for i, leaf in enumerate(solid.leaves())
        for f in leaf_faces(leaf, i)
        if face_survives(f, solid, eps)
    ]
    if not faces:
        raise EmptyResultError("no face of the solid survives probing")
    return faces


# ---------------------------------------------------------------------------
# candidate curves

def _plane_of(face):
    """(point, unit normal) for planar faces, else None."""
    if isinstance(face, CapFace):
        p = face.point(np.array([[0.5, 0.5]]))[0]
        n = face.normal(np.array([[0.5, 0.5]]))[0]
        return p, n
    if isinstance(face, SideFace) and isinstance(face.seg, LineSeg):
        p = face.point(np.array([[0.5, 0.5]]))[0]
        n = face.normal(np.array([[0.5, 0.5]]))[0]
        return p, n
    return None


def _cylinder_of(face):
    """(axis point, unit axis, world radius) for cylindrical side faces."""
    if isinstance(face, SideFace) and isinstance(face.seg, (ArcSeg, CircleSeg)):
        frame = face.ext.frame
        c = frame.to_world(
            np.array([[face.seg.center[0], face.seg.center[1], 0.0]])
        )[0]
        return c, np.asarray(frame.n), face.seg.radius * frame.scale
    return None


def _line_candidate(point, direction, half_span) -> Line3D:
    d = direction / np.linalg.norm(direction)
    return Line3D(tuple(point - half_span * d), tuple(point + half_span * d))


def _plane_plane(fa, fb, half_span):
    pa = _plane_of(fa)
    pb = _plane_of(fb)
    if pa is None or pb is None:
        return []
    (p1, n1), (p2, n2) = pa, pb
    d = np.cross(n1, n2)
    nd = np.linalg.norm(d)
    if nd < 1e-9:
        return []
    d = d / nd
    # point on both planes: solve least-squares for the two offsets
    a = np.stack([n1, n2, d])
    b = np.array([np.dot(n1, p1), np.dot(n2, p2), 0.0])
    try:
        p0 = np.linalg.solve(a, b)
    except np.linalg.LinAlgError:
        return []
    return [_line_candidate(p0, d, half_span)]


def _plane_cylinder(plane_face, cyl_face, half_span):
    pl = _plane_of(plane_face)
    cy = _cylinder_of(cyl_face)
    if pl is None or cy is None:
        return []
    (pp, pn) = pl
    (c0, axis, r) = cy
    dot = abs(float(np.dot(axis, pn)))
    if dot > 1.0 - 1e-9:
        # plane perpendicular to the axis: cross-section circle/arc
        z = float(np.dot(pp - c0, axis))
        ext = cyl_face.ext
        if ext.z1 - ext.z0 < 1e-12:
            return []
        v = (z - ext.z0) / (ext.z1 - ext.z0)
        if not -1e-6 <= v <= 1.0 + 1e-6:
            return []
        return [cyl_face.cross_section_curve(min(max(v, 0.0), 1.0))]
    if dot < 1e-9:
        # axis lies in the plane: up to two chord lines
        h = float(np.dot(pp - c0, pn))
        if abs(h) > r:
            return []
        w = math.sqrt(max(r * r - h * h, 0.0))
        u_perp = np.cross(axis, pn)
        u_perp = u_perp / np.linalg.norm(u_perp)
        out = [
            _line_candidate(c0 + h * pn + w * u_perp, axis, half_span),
        ]
        if w > 1e-12:
            out.append(_line_candidate(c0 + h * pn - w * u_perp, axis, half_span))
        return out
    return []  # oblique sections (ellipses) are out of scope


def _boundary_candidates(fa, fb):
    """Boundary curves of one face that touch the other's carrier+region."""
    out = []
    ts = np.linspace(0.0, 1.0, 9)
    for src, dst in ((fa, fb), (fb, fa)):
        for curve in src.boundary_curves():
            pts = curve.points(ts)
            on = dst.on_carrier(pts, _CARRIER_TOL)
            if int(on.sum()) < 2:
                continue
            uv = dst.uv_of_points(pts)
            ok = on & dst.region_mask(uv, 1e-6)
            if int(ok.sum()) >= 2:
                out.append(curve)
    return out


def _candidate_curves(fa, fb, half_span):
    cands = list(_boundary_candidates(fa, fb))
    if fa.leaf_index != fb.leaf_index:
        cands.extend(_plane_plane(fa, fb, half_span))
        cands.extend(_plane_cylinder(fa, fb, half_span))
        cands.extend(_plane_cylinder(fb, fa, half_span))
    return cands


# ---------------------------------------------------------------------------
# candidate validation

def _face_pass(face, curve_pts, solid, eps):
    """Per-point: curve point borders surviving material of this face.

    Points are nudged off the curve within the face's parameter plane
    (perpendicular to the curve's uv image, both signs) and flip-probed, so
    seam ambiguities on the curve itself don't corrupt the verdict.
    """
    m = len(curve_pts)
    uv = face.uv_of_points(curve_pts)
    duv = np.empty_like(uv)
    duv[1:-1] = uv[2:] - uv[:-2]
    duv[0] = uv[1] - uv[0]
    duv[-1] = uv[-1] - uv[-2]
    norm = np.linalg.norm(duv, axis=1, keepdims=True)
    norm[norm < 1e-15] = 1.0
    duv /= norm
    perp = np.stack([-duv[:, 1], duv[:, 0]], axis=1)

    # world displacement rate of a unit uv step along perp
    delta = 1e-4
    p_base = face.point(uv)
    p_off = face.point(uv + delta * perp)
    rate = np.linalg.norm(p_off - p_base, axis=1) / delta
    rate[rate < 1e-12] = 1e-12
    h = np.minimum(8.0 * eps / rate, 0.2)[:, None]

    passed = np.zeros(m, dtype=bool)
    for sign in (1.0, -1.0):
        uv_n = uv + sign * h * perp
        in_face = face.region_mask(uv_n, 0.0)
        if not in_face.any():
            continue
        pn = face.point(uv_n)
        nn = face.normal(uv_n)
        ok = np.zeros(m, dtype=bool)
        ok[in_face] = flip_survives(solid, pn[in_face], nn[in_face], eps)
        passed |= ok
    return passed


def _validate_curve(curve, fa, fb, solid, eps):
    """Longest surviving sub-curve shared by both faces, or None."""
    ts = np.linspace(0.0, 1.0, _N_PROBE)
    pts = curve.points(ts)
    ok = fa.on_carrier(pts, _CARRIER_TOL) & fb.on_carrier(pts, _CARRIER_TOL)
    if int(ok.sum()) < 2:
        return None
    ok &= fa.region_mask(fa.uv_of_points(pts), 1e-6)
    ok &= fb.region_mask(fb.uv_of_points(pts), 1e-6)
    if int(ok.sum()) < 2:
        return None
    ok &= _face_pass(fa, pts, solid, eps)
    if int(ok.sum()) < 2:
        return None
    ok &= _face_pass(fb, pts, solid, eps)

    # longest run of consecutive surviving samples
    best_len = 0
    best = None
    run = 0
    for k in range(_N_PROBE):
        if ok[k]:
            run += 1
            if run > best_len:
                best_len = run
                best = (k - run + 1, k)
        else:
            run = 0
    if best is None or best_len < 2:
        return None
    t0, t1 = ts[best[0]], ts[best[1]]
    sub = curve.subcurve(t0, t1)
    length = sub.length()
    if length <= max(4.0 * eps, 1e-9):
        return None
    return sub, length


def adjacency_graph(solid: Solid) -> FaceGraph:
    """Build the face-adjacency graph of the composite solid."""
    faces = enumerate_faces(solid)
    eps = probe_epsilon(solid)
    lo, hi = solid.bbox()
    half_span = float(np.linalg.norm(hi - lo))
    edges = []
    for i in range(len(faces)):
        for j in range(i + 1, len(faces)):
            best = None
            for cand in _candidate_curves(faces[i], faces[j], half_span):
                res = _validate_curve(cand, faces[i], faces[j], solid, eps)
                if res and (best is None or res[1] > best[1]):
                    best = res
            if best is not None:
                edges.append(GraphEdge(i=i, j=j, curve=best[0], length=best[1]))
    return FaceGraph(solid=solid, faces=faces, edges=edges)


# ---------------------------------------------------------------------------
# grids and export

def _grid_uv(r: int) -> np.ndarray:
    s = np.linspace(0.0, 1.0, r)
    uu, vv = np.meshgrid(s, s, indexing="ij")
    return np.stack([uu.ravel(), vv.ravel()], axis=1)


def sample_uv_grids(graph: FaceGraph, resolution: int = DEFAULT_RESOLUTION) -> FaceGraph:
    """Populate R x R x 7 face grids (point, normal, mask) and R x 6 curve grids."""
    if resolution < 2:
        raise CadkitError("grid resolution must be >= 2")
    r = resolution
    eps = probe_epsilon(graph.solid)
    uv = _grid_uv(r)
    face_grids = np.zeros((graph.n, r, r, 7))
    for fi, face in enumerate(graph.faces):
        pts = face.point(uv)
        normals = face.normal(uv)
        region = face.region_mask(uv, _CARRIER_TOL)
        mask = np.zeros(len(uv), dtype=bool)
        if region.any():
            mask[region] = flip_survives(
                graph.solid, pts[region], normals[region], eps
            )
        grid = np.concatenate(
            [pts, normals, mask.astype(np.float64)[:, None]], axis=1
        )
        face_grids[fi] = grid.reshape(r, r, 7)

    edge_grids = np.zeros((len(graph.edges), r, 6))
    ts = np.linspace(0.0, 1.0, r)
    for ei, edge in enumerate(graph.edges):
        pts = edge.curve.points(ts)
        tans = edge.curve.tangents(ts)
        edge_grids[ei] = np.concatenate([pts, tans], axis=1)

    graph.resolution = r
    graph.face_grids = face_grids
    graph.edge_grids = edge_grids
    return graph


def export_tensors(graph: FaceGraph, path) -> None:
    """Write face grids, edge index, and edge grids as a tensor archive."""
    if graph.face_grids is None or graph.edge_grids is None:
        raise CadkitError("grids not populated; call sample_uv_grids first")
    r = graph.resolution
    write_archive(
        path,
        {
            "face_grids": graph.face_grids.astype(np.float32),
            "edge_index": graph.edge_index(),
            "edge_grids": graph.edge_grids.astype(np.float32).reshape(-1, r, 6),
        },
    )


def read_tensors(path) -> dict:
    """Read a graph tensor archive back as {name: ndarray}."""
    return read_archive(path)


def graph_tensors_for_program(program, resolution: int = DEFAULT_RESOLUTION):
    """Convenience: execute + graph + grids, returning the populated FaceGraph."""
    from ..geom.solid import execute

    graph = adjacency_graph(execute(program))
    return sample_uv_grids(graph, resolution)
