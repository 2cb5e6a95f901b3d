"""The 8-bit parameter grid shared by the DSL, the token format, and the executor.

Continuous parameters are stored as integer levels in [0, 255]; level q maps to
``q / 255 * (hi - lo) + lo``.  The ranges below are frozen: changing any of them
silently re-interprets every serialized program and token file.
"""

from __future__ import annotations

import math

LEVELS = 256
QMAX = 255

# field -> (lo, hi) of the continuous range
RANGES: dict[str, tuple[float, float]] = {
    "coord": (-1.0, 1.0),        # sketch-plane x, y
    "radius": (0.0, 1.0),
    "sweep": (0.0, 2.0 * math.pi),
    "theta": (0.0, math.pi),
    "phi": (-math.pi, math.pi),
    "gamma": (-math.pi, math.pi),
    "origin": (-1.0, 1.0),
    "scale": (0.0, 2.5),
    "distance": (-1.0, 1.0),     # extrude e1 / e2 (signed)
}


def dequant(field: str, level):
    """Map an integer level (or array of levels) to its continuous value."""
    lo, hi = RANGES[field]
    return level / QMAX * (hi - lo) + lo


def quant(field: str, value: float) -> int:
    """Nearest integer level for a continuous value, clamped to [0, 255]."""
    lo, hi = RANGES[field]
    q = round((value - lo) / (hi - lo) * QMAX)
    return int(min(max(q, 0), QMAX))


# One quantization step in de-quantized units, per field; used by the loop
# closure snap tolerance in geom.
def step(field: str) -> float:
    lo, hi = RANGES[field]
    return (hi - lo) / QMAX
