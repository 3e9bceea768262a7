"""Exact Euclidean distance transforms over binary masks.

``exact_edt`` is the production path: the two-pass separable
lower-envelope-of-parabolas transform, all in integer arithmetic, O(w*h).
``brute_force_edt`` is the independent verification oracle for small masks.
Squared distances are stored as int64; square roots are taken only when
sampling, so fields from the two routes can be compared exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import edt_columns, edt_rows
from .errors import EmptyMaskError, OutOfBoundsError
from .mask_io import BinaryMask
from .skeletonize import Skeleton


@dataclass(frozen=True, eq=False)
class DistanceField:
    """Per-pixel squared Euclidean distance to the nearest source foreground pixel."""

    dist2: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.dist2, dtype=np.int64)
        arr.setflags(write=False)
        object.__setattr__(self, "dist2", arr)

    @property
    def width(self) -> int:
        return self.dist2.shape[1]

    @property
    def height(self) -> int:
        return self.dist2.shape[0]

    def __eq__(self, other):
        if not isinstance(other, DistanceField):
            return NotImplemented
        return bool(np.array_equal(self.dist2, other.dist2))


def exact_edt(mask: BinaryMask) -> DistanceField:
    """Exact squared-distance transform of ``mask`` in O(width*height)."""
    if not mask.bits.any():
        raise EmptyMaskError("mask has no foreground pixel")
    h, w = mask.bits.shape
    fg = mask.bits.view(np.uint8)
    g = np.empty((h, w), dtype=np.int32)
    inf = np.int32(h + w)  # larger than any in-column distance
    edt_columns(fg, g, inf)
    dist2 = np.empty((h, w), dtype=np.int64)
    edt_rows(g, dist2)
    return DistanceField(dist2)


def brute_force_edt(mask: BinaryMask) -> DistanceField:
    """O(pixels * foreground) reference transform; intended for masks <= 256x256."""
    if not mask.bits.any():
        raise EmptyMaskError("mask has no foreground pixel")
    h, w = mask.bits.shape
    fys, fxs = np.nonzero(mask.bits)
    fxs = fxs.astype(np.int64)
    fys = fys.astype(np.int64)
    xs = np.arange(w, dtype=np.int64)
    dist2 = np.empty((h, w), dtype=np.int64)
    for y in range(h):
        # (w, n_fg) pairwise squared distances from row y, one row at a time
        d2 = (xs[:, None] - fxs[None, :]) ** 2 + (y - fys[None, :]) ** 2
        dist2[y] = d2.min(axis=1)
    return DistanceField(dist2)


def sample_min_distances(field: DistanceField, points: Skeleton) -> np.ndarray:
    """Euclidean distance from each skeleton point to the field's source set.

    Returns a float64 array aligned with the skeleton's point order;
    consumers must not rely on any particular ordering.
    """
    pts = points.points
    if len(pts) == 0:
        return np.zeros(0, dtype=np.float64)
    xs = pts[:, 0]
    ys = pts[:, 1]
    if xs.min() < 0 or xs.max() >= field.width or ys.min() < 0 or ys.max() >= field.height:
        raise OutOfBoundsError(f"skeleton points exceed field bounds {field.width}x{field.height}")
    return np.sqrt(field.dist2[ys, xs].astype(np.float64))
