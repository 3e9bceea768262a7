import os

# Allow the scale-budget test to request 8 numba threads; must be set before
# numba is first imported anywhere in the process.
os.environ.setdefault("NUMBA_NUM_THREADS", "8")

import numpy as np
import pytest

from phdeval import BinaryMask, Skeleton


def bernoulli_mask(rng: np.random.Generator, w: int, h: int, density: float, ensure_fg: bool = True) -> BinaryMask:
    bits = rng.random((h, w)) < density
    if ensure_fg and not bits.any():
        bits[rng.integers(h), rng.integers(w)] = True
    return BinaryMask(bits)


def blob_mask(rng: np.random.Generator, w: int, h: int) -> BinaryMask:
    """Union of random rectangles, disks and thick strokes; membrane-ish blobs."""
    bits = np.zeros((h, w), dtype=bool)
    for _ in range(int(rng.integers(1, 6))):
        kind = rng.integers(3)
        if kind == 0:
            x0 = int(rng.integers(0, w))
            y0 = int(rng.integers(0, h))
            bw = int(rng.integers(1, max(2, w // 2)))
            bh = int(rng.integers(1, max(2, h // 2)))
            bits[y0 : y0 + bh, x0 : x0 + bw] = True
        elif kind == 1:
            cx = rng.integers(0, w)
            cy = rng.integers(0, h)
            r = int(rng.integers(1, max(2, min(w, h) // 3)))
            yy, xx = np.ogrid[:h, :w]
            bits |= (xx - cx) ** 2 + (yy - cy) ** 2 <= r * r
        else:
            x, y = int(rng.integers(0, w)), int(rng.integers(0, h))
            dx, dy = int(rng.integers(-1, 2)), int(rng.integers(-1, 2))
            if dx == 0 and dy == 0:
                dx = 1
            thick = int(rng.integers(1, 4))
            for _ in range(int(rng.integers(3, max(4, max(w, h))))):
                bits[max(0, y) : min(h, y + thick), max(0, x) : min(w, x + thick)] = True
                x, y = x + dx, y + dy
                if not (0 <= x < w and 0 <= y < h):
                    break
    if not bits.any():
        bits[h // 2, w // 2] = True
    return BinaryMask(bits)


def random_point_skeleton(rng: np.random.Generator, w: int, h: int, n: int) -> Skeleton:
    pts = np.column_stack((rng.integers(0, w, size=n), rng.integers(0, h, size=n)))
    return Skeleton(points=pts, shape=(w, h))


def curated_corpus() -> dict[str, BinaryMask]:
    """Lines, rings, bars and text-like strokes for the thinning suite."""
    shapes: dict[str, np.ndarray] = {}

    a = np.zeros((9, 30), dtype=bool)
    a[4, 3:27] = True
    shapes["hline"] = a

    a = np.zeros((30, 9), dtype=bool)
    a[3:27, 4] = True
    shapes["vline"] = a

    a = np.zeros((24, 24), dtype=bool)
    for i in range(2, 22):
        a[i, i] = True
    shapes["diagonal"] = a

    a = np.zeros((9, 40), dtype=bool)
    a[3:6, 2:38] = True
    shapes["bar_3x36"] = a

    a = np.zeros((13, 40), dtype=bool)
    a[3:8, 4:36] = True
    shapes["bar_5x32"] = a

    yy, xx = np.ogrid[:40, :40]
    r2 = (xx - 20) ** 2 + (yy - 20) ** 2
    shapes["ring"] = (r2 <= 15**2) & (r2 >= 11**2)

    yy, xx = np.ogrid[:32, :32]
    r2 = (xx - 16) ** 2 + (yy - 16) ** 2
    shapes["thin_ring"] = (r2 <= 12**2) & (r2 >= 10**2)

    # text-like strokes: T, L, Z glyphs drawn 2px thick
    a = np.zeros((24, 20), dtype=bool)
    a[3:5, 3:17] = True
    a[3:20, 9:11] = True
    shapes["glyph_T"] = a

    a = np.zeros((24, 20), dtype=bool)
    a[3:20, 4:6] = True
    a[18:20, 4:16] = True
    shapes["glyph_L"] = a

    a = np.zeros((24, 24), dtype=bool)
    a[3:5, 3:20] = True
    a[18:20, 3:20] = True
    for i in range(14):
        y = 5 + i
        x = 17 - i
        a[y, x : x + 2] = True
    shapes["glyph_Z"] = a

    return {name: BinaryMask(bits) for name, bits in shapes.items()}


@pytest.fixture(scope="session")
def corpus():
    return curated_corpus()


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
