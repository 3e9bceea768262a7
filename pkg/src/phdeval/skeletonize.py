"""Zhang-Suen thinning: reduce a mask to a one-pixel-wide skeleton.

Each iteration runs two sub-iterations.  A foreground pixel P1 with
8-neighbors P2..P9 (clockwise from north) is deleted in sub-iteration 1 iff

    (a) 2 <= B(P1) <= 6, B = number of foreground 8-neighbors,
    (b) A(P1) == 1,      A = 0->1 transitions in the cycle P2,P3,...,P9,P2,
    (c) P2*P4*P6 == 0,
    (d) P4*P6*P8 == 0,

and in sub-iteration 2 with (c), (d) replaced by P2*P4*P8 == 0 and
P2*P6*P8 == 0.  Deletion is simultaneous at the end of each sub-iteration;
pixels outside the image are background; iteration stops when a full pass
deletes nothing.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import zs_apply, zs_subiteration
from .mask_io import BinaryMask


@dataclass(frozen=True, eq=False)
class Skeleton:
    """Unordered set of (x, y) pixel coordinates plus the source mask shape.

    ``points`` is an (n, 2) int64 array of (x=column, y=row) pairs, stored
    deduplicated in row-major order so identical skeletons compare equal.
    ``shape`` is (width, height).
    """

    points: np.ndarray
    shape: tuple[int, int]

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.int64).reshape(-1, 2)
        w, h = self.shape
        if pts.size:
            if pts[:, 0].min() < 0 or pts[:, 0].max() >= w or pts[:, 1].min() < 0 or pts[:, 1].max() >= h:
                raise ValueError("skeleton point outside its shape")
            order = np.lexsort((pts[:, 0], pts[:, 1]))
            pts = pts[order]
            keep = np.ones(len(pts), dtype=bool)
            keep[1:] = np.any(pts[1:] != pts[:-1], axis=1)
            pts = pts[keep]
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "shape", (int(w), int(h)))

    def __len__(self):
        return len(self.points)

    def point_set(self) -> set[tuple[int, int]]:
        return {(int(x), int(y)) for x, y in self.points}

    def __eq__(self, other):
        if not isinstance(other, Skeleton):
            return NotImplemented
        return self.shape == other.shape and bool(np.array_equal(self.points, other.points))

    def __repr__(self):
        return f"Skeleton({len(self.points)} points, shape={self.shape})"


def thin(mask: BinaryMask) -> Skeleton:
    """Run Zhang-Suen thinning to its fixed point and collect the survivors."""
    # 1-pixel zero border stands in for the implicit background outside the image
    img = np.zeros((mask.height + 2, mask.width + 2), dtype=np.uint8)
    img[1:-1, 1:-1] = mask.bits
    flags = np.zeros_like(img)
    while True:
        deleted = zs_subiteration(img, flags, 0)
        if deleted:
            zs_apply(img, flags)
        deleted2 = zs_subiteration(img, flags, 1)
        if deleted2:
            zs_apply(img, flags)
        if deleted + deleted2 == 0:
            break
    ys, xs = np.nonzero(img[1:-1, 1:-1])
    points = np.column_stack((xs, ys)).astype(np.int64)
    return Skeleton(points=points, shape=(mask.width, mask.height))


def skeleton_to_mask(skeleton: Skeleton) -> BinaryMask:
    """Rasterize a skeleton back into a mask of its source shape."""
    w, h = skeleton.shape
    bits = np.zeros((h, w), dtype=bool)
    if len(skeleton.points):
        bits[skeleton.points[:, 1], skeleton.points[:, 0]] = True
    return BinaryMask(bits)
