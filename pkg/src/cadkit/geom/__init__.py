"""Geometry kernel: de-quantized sketches, extruded CSG solids, sampling."""

from .sketch import (
    ArcSeg,
    CircleSeg,
    DegenerateLoopError,
    LineSeg,
    OpenLoopError,
    Profile,
    SelfIntersectionError,
    arc_from_chord,
    evaluate_sketch,
    loop_signed_area,
    profile_area,
    profile_bbox,
    profile_from_chains,
    profile_from_commands,
    signed_distance,
)
from .solid import (
    CLASSIFY_EPS,
    EmptyResultError,
    Extrusion,
    PlaneFrame,
    Solid,
    contains,
    execute,
    extent_interval,
    flip_survives,
    leaf_from_extrude,
    mc_volume,
)
from .faces import (
    Arc3D,
    CapFace,
    Curve3D,
    Face,
    Line3D,
    SideFace,
    face_survives,
    leaf_faces,
    probe_epsilon,
)
from .sample import (
    SamplingExhaustedError,
    ZeroExtentError,
    load_xyz,
    normalize,
    sample_surface,
    save_xyz,
)

__all__ = [
    "ArcSeg", "CircleSeg", "LineSeg", "Profile",
    "OpenLoopError", "DegenerateLoopError", "SelfIntersectionError",
    "arc_from_chord", "evaluate_sketch", "profile_from_chains",
    "profile_from_commands",
    "signed_distance", "profile_area", "profile_bbox", "loop_signed_area",
    "PlaneFrame", "Extrusion", "Solid", "EmptyResultError", "CLASSIFY_EPS",
    "execute", "contains", "mc_volume", "extent_interval", "leaf_from_extrude",
    "flip_survives",
    "CapFace", "SideFace", "Face", "Line3D", "Arc3D", "Curve3D",
    "leaf_faces", "face_survives", "probe_epsilon",
    "SamplingExhaustedError", "ZeroExtentError",
    "sample_surface", "normalize", "save_xyz", "load_xyz",
]
