"""The 8 square symmetries (D4) acting on grids, points, and azimuths.

An op is an integer 0..7 encoding ``rot**r . mirror**m`` with ``r = op % 4``
counterclockwise quarter-turns in array space and ``m = op // 4`` a
horizontal flip applied *first*.  The three actions are kept consistent:
transforming a grid with :func:`d4_grid` moves the pixel at continuous
position ``(x, y)`` to :func:`d4_point` of that position, and a heading
transforms via :func:`d4_azimuth`.

All point arithmetic is swaps and ``extent - coordinate`` subtractions, so
for power-of-two extents and dyadic coordinates the maps are exact in
float64 — transform round trips are bit-identical, not merely close.
"""

from __future__ import annotations

import numpy as np

from .errors import InvalidArgumentError
from .geodata import TransmitterSpec

#: All eight ops; op 0 is the identity.
D4_OPS = tuple(range(8))


def _check_op(op: int) -> tuple[int, int]:
    if op not in D4_OPS:
        raise InvalidArgumentError(f"op must be in 0..7, got {op}")
    return op % 4, op // 4


def d4_grid(arr: np.ndarray, op: int) -> np.ndarray:
    """Apply op to a HxW or HxWxC array (flip first, then rotate)."""
    rot, mirror = _check_op(op)
    out = np.fliplr(arr) if mirror else arr
    if rot:
        out = np.rot90(out, rot)
    return np.ascontiguousarray(out)


def d4_point(x: float, y: float, extent: float, op: int) -> tuple[float, float]:
    """Map a continuous tile position under op.

    One quarter-turn sends ``(x, y) -> (y, extent - x)``; the mirror sends
    ``(x, y) -> (extent - x, y)``.
    """
    rot, mirror = _check_op(op)
    if mirror:
        x = extent - x
    for _ in range(rot):
        x, y = y, extent - x
    return x, y


def d4_azimuth(azimuth_deg: float, op: int) -> float:
    """Map a heading (degrees, 0 = -y, 90 = +x) under op."""
    rot, mirror = _check_op(op)
    az = azimuth_deg
    if mirror:
        az = -az
    az -= 90.0 * rot
    return az % 360.0


def d4_inverse(op: int) -> int:
    """The op undoing `op`; reflections are their own inverse."""
    rot, mirror = _check_op(op)
    if mirror:
        return op
    return (4 - rot) % 4


def d4_compose(after: int, before: int) -> int:
    """Single op equal to applying `before` then `after`."""
    ra, ma = _check_op(after)
    rb, mb = _check_op(before)
    if ma == 0:
        return (ra + rb) % 4 + 4 * mb
    return (ra - rb) % 4 + 4 * (1 - mb)


def d4_transmitter(tx: TransmitterSpec, extent: float, op: int) -> TransmitterSpec:
    """Transmitter with position and azimuth transformed under op."""
    x, y = d4_point(tx.x_m, tx.y_m, extent, op)
    return TransmitterSpec(
        x_m=x,
        y_m=y,
        height_m=tx.height_m,
        azimuth_deg=d4_azimuth(tx.azimuth_deg, op),
        pattern=tx.pattern,
    )
