"""Load, binarize, validate and write binary segmentation masks.

On-disk contract: 8-bit grayscale PNG, foreground stored as 255 and
background as 0.  Files we write round-trip bit-for-bit when read back with
CANONICAL_POLICY (threshold 128, light-is-foreground).
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import DecodeError, ShapeMismatchError, ZeroDimensionError


class Polarity(enum.Enum):
    """Which side of the binarization threshold counts as foreground."""

    LIGHT_IS_FOREGROUND = "light"
    DARK_IS_FOREGROUND = "dark"


@dataclass(frozen=True)
class BinarizationPolicy:
    """Gray-level threshold in [0, 255] plus the foreground polarity."""

    threshold: int = 128
    polarity: Polarity = Polarity.DARK_IS_FOREGROUND

    def __post_init__(self):
        if not 0 <= self.threshold <= 255:
            raise ValueError(f"threshold must be in [0, 255], got {self.threshold}")


# Membrane annotations are commonly dark strokes on a light background, so
# the user-facing default binarizes dark pixels as foreground.  Masks written
# by this toolkit store foreground as 255 and are read back with the
# canonical (light) policy.
DEFAULT_POLICY = BinarizationPolicy(threshold=128, polarity=Polarity.DARK_IS_FOREGROUND)
CANONICAL_POLICY = BinarizationPolicy(threshold=128, polarity=Polarity.LIGHT_IS_FOREGROUND)


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Immutable 2-D boolean raster; True marks foreground (membrane) pixels.

    ``bits`` is row-major with shape (height, width).
    """

    bits: np.ndarray

    def __post_init__(self):
        arr = np.ascontiguousarray(self.bits, dtype=bool)
        if arr.ndim != 2:
            raise ValueError(f"mask must be 2-D, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ZeroDimensionError(f"mask dimensions must be >= 1, got {arr.shape}")
        arr.setflags(write=False)
        object.__setattr__(self, "bits", arr)

    @property
    def width(self) -> int:
        return self.bits.shape[1]

    @property
    def height(self) -> int:
        return self.bits.shape[0]

    @property
    def shape(self) -> tuple[int, int]:
        """(width, height), the convention used by Skeleton."""
        return (self.width, self.height)

    def foreground_count(self) -> int:
        return int(np.count_nonzero(self.bits))

    def __eq__(self, other):
        if not isinstance(other, BinaryMask):
            return NotImplemented
        return self.bits.shape == other.bits.shape and bool(np.array_equal(self.bits, other.bits))

    def __repr__(self):
        return f"BinaryMask({self.width}x{self.height}, fg={self.foreground_count()})"


def _to_gray(img: Image.Image) -> np.ndarray:
    """Decode a PIL image to a uint8 gray array.

    RGB is reduced with the fixed integer luma formula
    round((299R + 587G + 114B) / 1000) so binarization is
    platform-deterministic; PIL's own convert("L") truncates instead.
    """
    mode = img.mode
    if mode == "L":
        return np.asarray(img, dtype=np.uint8)
    if mode == "1":
        return np.asarray(img, dtype=np.uint8) * 255
    if mode == "LA":
        return np.asarray(img.getchannel(0), dtype=np.uint8)
    if mode == "P":
        img = img.convert("RGB")
        mode = "RGB"
    if mode in ("RGB", "RGBA"):
        rgb = np.asarray(img, dtype=np.uint32)[:, :, :3]
        luma = (299 * rgb[:, :, 0] + 587 * rgb[:, :, 1] + 114 * rgb[:, :, 2] + 500) // 1000
        return luma.astype(np.uint8)
    raise DecodeError(f"unsupported image mode {mode!r}")


def load_mask(path, policy: BinarizationPolicy = DEFAULT_POLICY) -> BinaryMask:
    """Read an image file and binarize it under ``policy``.

    Foreground is gray >= threshold under LIGHT_IS_FOREGROUND and
    gray < threshold under DARK_IS_FOREGROUND.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    try:
        with Image.open(path) as img:
            gray = _to_gray(img)
    except UnidentifiedImageError as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    except OSError as exc:
        raise DecodeError(f"cannot decode {path}: {exc}") from exc
    if gray.ndim != 2 or gray.shape[0] == 0 or gray.shape[1] == 0:
        raise ZeroDimensionError(f"image {path} has degenerate shape {gray.shape}")
    if policy.polarity is Polarity.LIGHT_IS_FOREGROUND:
        bits = gray >= policy.threshold
    else:
        bits = gray < policy.threshold
    return BinaryMask(bits)


def write_mask(mask: BinaryMask, path) -> None:
    """Write ``mask`` as an 8-bit grayscale image, foreground=255."""
    path = Path(path)
    arr = np.where(mask.bits, np.uint8(255), np.uint8(0))
    img = Image.fromarray(arr, mode="L")
    if path.suffix:
        img.save(path)
    else:
        img.save(path, format="PNG")


def assert_same_shape(a: BinaryMask, b: BinaryMask) -> None:
    """Raise ShapeMismatchError unless the two masks agree in width and height."""
    if a.bits.shape != b.bits.shape:
        raise ShapeMismatchError((a.width, a.height), (b.width, b.height))
