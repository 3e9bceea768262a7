"""Every score the toolkit reports: F1/IoU/Dice (plain and skeletonized),
classic Hausdorff distance, and the Perceptual Hausdorff Distance (PHD).

PHD between two nonempty point sets X and Y with tolerance t >= 0:

    (1/|X|) * sum_{x in X} g(n_Y(x)) + (1/|Y|) * sum_{y in Y} g(n_X(y))

where n_Y(x) is the exact nearest Euclidean distance from x to Y and
g(d) = d when d > t, else 0.  Thresholding the nearest distance equals
the minimum over thresholded pair distances because g is non-decreasing:
for d1 <= d2, g(d1) <= g(d2), so min_y g(d(x,y)) = g(min_y d(x,y)).
That equivalence is what lets the implementation run on one distance
field per direction instead of an O(|X|*|Y|) pair search.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .distance_field import exact_edt, sample_min_distances
from .errors import EmptySkeletonError, ShapeMismatchError
from .mask_io import BinaryMask, assert_same_shape
from .skeletonize import Skeleton, skeleton_to_mask, thin


@dataclass(frozen=True)
class ConfusionCounts:
    """Pixel-classification counts for one predicted/ground-truth pair."""

    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    @property
    def degenerate(self) -> bool:
        """Both masks empty: every overlap metric is 1.0 by convention."""
        return self.tp + self.fp + self.fn == 0


class Orientation(enum.Enum):
    HIGHER_IS_BETTER = "higher"
    LOWER_IS_BETTER = "lower"


class Preprocess(enum.Enum):
    NONE = "none"
    SKELETONIZE_BOTH = "skeletonize"


_PIXEL_KINDS = ("f1", "iou", "dice")


@dataclass(frozen=True)
class MetricDescriptor:
    """One configured metric: what to compute, on what, and which way is better."""

    kind: str
    preprocess: Preprocess = Preprocess.NONE
    tolerance: float | None = None

    def __post_init__(self):
        if self.kind == "phd":
            if self.tolerance is None:
                raise ValueError("phd descriptor requires a tolerance")
            if not math.isfinite(self.tolerance) or self.tolerance < 0:
                raise ValueError(f"tolerance must be finite and >= 0, got {self.tolerance}")
            if self.preprocess is not Preprocess.NONE:
                raise ValueError("phd always skeletonizes; preprocess must be NONE")
        elif self.kind in _PIXEL_KINDS:
            if self.tolerance is not None:
                raise ValueError(f"{self.kind} carries no tolerance")
        else:
            raise ValueError(f"unknown metric kind {self.kind!r}")

    @property
    def name(self) -> str:
        if self.kind == "phd":
            t = self.tolerance
            return f"phd:{int(t)}" if float(t).is_integer() else f"phd:{t:g}"
        suffix = "-sk" if self.preprocess is Preprocess.SKELETONIZE_BOTH else ""
        return f"{self.kind}{suffix}"

    @property
    def orientation(self) -> Orientation:
        return Orientation.LOWER_IS_BETTER if self.kind == "phd" else Orientation.HIGHER_IS_BETTER


def parse_metric(spec: str) -> MetricDescriptor:
    """Parse one metric spec string: "f1", "dice-sk", "phd:3", "phd:2.5"."""
    spec = spec.strip().lower()
    if spec.startswith("phd"):
        if ":" not in spec:
            raise ValueError(f"phd metric needs a tolerance, e.g. phd:3 (got {spec!r})")
        _, _, tol = spec.partition(":")
        return MetricDescriptor(kind="phd", tolerance=float(tol))
    if spec.endswith("-sk"):
        return MetricDescriptor(kind=spec[:-3], preprocess=Preprocess.SKELETONIZE_BOTH)
    return MetricDescriptor(kind=spec)


def parse_metric_list(specs: str) -> list[MetricDescriptor]:
    return [parse_metric(s) for s in specs.split(",") if s.strip()]


DEFAULT_METRICS = parse_metric_list("f1,iou,dice,phd:0,phd:1,phd:3,phd:5")


def confusion(pred: BinaryMask, gt: BinaryMask) -> ConfusionCounts:
    """Pixelwise confusion counts; raises ShapeMismatchError on shape disagreement."""
    assert_same_shape(pred, gt)
    tp = int(np.count_nonzero(pred.bits & gt.bits))
    fp = int(np.count_nonzero(pred.bits & ~gt.bits))
    fn = int(np.count_nonzero(~pred.bits & gt.bits))
    tn = pred.bits.size - tp - fp - fn
    return ConfusionCounts(tp=tp, fp=fp, fn=fn, tn=tn)


def f1(c: ConfusionCounts) -> float:
    """2*tp / (2*tp + fp + fn); 1.0 when both masks are empty."""
    if c.degenerate:
        return 1.0
    return 2.0 * c.tp / (2.0 * c.tp + c.fp + c.fn)


def iou(c: ConfusionCounts) -> float:
    """tp / (tp + fp + fn); 1.0 when both masks are empty."""
    if c.degenerate:
        return 1.0
    return c.tp / float(c.tp + c.fp + c.fn)


def dice(c: ConfusionCounts) -> float:
    """Dice coefficient; algebraically identical to f1 on binary masks."""
    return f1(c)


def nearest_distances(src: Skeleton, to: Skeleton) -> np.ndarray:
    """Distance from each point of ``src`` to the nearest point of ``to``.

    Computed by building a distance field over ``to`` and sampling it at
    ``src``'s points: O(w*h) regardless of how many points each side has.
    """
    if len(to) == 0:
        raise EmptySkeletonError("to")
    if src.shape != to.shape:
        raise ShapeMismatchError(src.shape, to.shape)
    fld = exact_edt(skeleton_to_mask(to))
    return sample_min_distances(fld, src)


def hausdorff(x: Skeleton, y: Skeleton) -> float:
    """Classic Hausdorff distance between two nonempty skeletons."""
    if len(x) == 0:
        raise EmptySkeletonError("x")
    if len(y) == 0:
        raise EmptySkeletonError("y")
    d_xy = nearest_distances(x, y).max()
    d_yx = nearest_distances(y, x).max()
    return float(max(d_xy, d_yx))


def phd_from_distances(d_xy: np.ndarray, d_yx: np.ndarray, tolerance: float) -> float:
    """PHD given the two directed nearest-distance vectors.

    Split out so tolerance sweeps can reuse one distance-field pass per
    direction across many tolerances.
    """
    if tolerance < 0:
        raise ValueError(f"tolerance must be >= 0, got {tolerance}")
    term_x = d_xy[d_xy > tolerance].sum() / len(d_xy)
    term_y = d_yx[d_yx > tolerance].sum() / len(d_yx)
    return float(term_x + term_y)


def phd(x: Skeleton, y: Skeleton, tolerance: float) -> float:
    """Perceptual Hausdorff Distance between two skeletons.

    One empty side is an error; two empty sides agree perfectly and give 0.
    """
    if len(x) == 0 and len(y) == 0:
        return 0.0
    if len(x) == 0:
        raise EmptySkeletonError("x")
    if len(y) == 0:
        raise EmptySkeletonError("y")
    return phd_from_distances(nearest_distances(x, y), nearest_distances(y, x), tolerance)


@dataclass(frozen=True)
class MetricValue:
    """Outcome of one metric on one image pair: a score or a failure."""

    name: str
    value: float | None = None
    error: str | None = None
    degenerate: bool = False

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class PairReport:
    """Scores of all configured metrics for one predicted/ground-truth pair."""

    results: dict[str, MetricValue] = field(default_factory=dict)

    def __getitem__(self, name: str) -> MetricValue:
        return self.results[name]

    @property
    def failed(self) -> list[MetricValue]:
        return [v for v in self.results.values() if not v.ok]


def evaluate_pair(pred: BinaryMask, gt: BinaryMask, metrics: list[MetricDescriptor]) -> PairReport:
    """Score one pair under every descriptor.

    Skeletons are computed at most once per mask and the two PHD
    distance-field passes are shared across all configured tolerances.
    A per-metric failure (e.g. one side skeletonizes to nothing) is
    recorded without aborting the remaining metrics.
    """
    assert_same_shape(pred, gt)
    report = PairReport()
    cache: dict[str, object] = {}

    def skeletons() -> tuple[Skeleton, Skeleton]:
        if "sk" not in cache:
            cache["sk"] = (thin(pred), thin(gt))
        return cache["sk"]

    def phd_distances() -> tuple[np.ndarray, np.ndarray]:
        if "phd_d" not in cache:
            sk_pred, sk_gt = skeletons()
            if len(sk_pred) == 0 and len(sk_gt) == 0:
                cache["phd_d"] = (np.zeros(1), np.zeros(1))  # degenerate: PHD 0
            else:
                cache["phd_d"] = (nearest_distances(sk_pred, sk_gt), nearest_distances(sk_gt, sk_pred))
        return cache["phd_d"]

    for desc in metrics:
        try:
            if desc.kind == "phd":
                sk_pred, sk_gt = skeletons()
                both_empty = len(sk_pred) == 0 and len(sk_gt) == 0
                if len(sk_pred) == 0 and not both_empty:
                    raise EmptySkeletonError("pred")
                if len(sk_gt) == 0 and not both_empty:
                    raise EmptySkeletonError("gt")
                d_xy, d_yx = phd_distances()
                value = phd_from_distances(d_xy, d_yx, desc.tolerance)
                report.results[desc.name] = MetricValue(desc.name, value=value, degenerate=both_empty)
            else:
                if desc.preprocess is Preprocess.SKELETONIZE_BOTH:
                    sk_pred, sk_gt = skeletons()
                    c = confusion(skeleton_to_mask(sk_pred), skeleton_to_mask(sk_gt))
                else:
                    c = confusion(pred, gt)
                fn = {"f1": f1, "iou": iou, "dice": dice}[desc.kind]
                report.results[desc.name] = MetricValue(desc.name, value=fn(c), degenerate=c.degenerate)
        except Exception as exc:  # per-metric failure entry, other metrics continue
            report.results[desc.name] = MetricValue(desc.name, error=f"{type(exc).__name__}: {exc}")
    return report
