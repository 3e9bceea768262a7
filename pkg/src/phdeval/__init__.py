"""Thin-structure segmentation evaluation toolkit.

Perceptual Hausdorff Distance plus classic pixel metrics over binary
membrane masks, and the machinery to measure how well each metric agrees
with human three-way preference votes.
"""

from .distance_field import DistanceField, brute_force_edt, exact_edt, sample_min_distances
from .mask_io import (
    BinarizationPolicy,
    BinaryMask,
    CANONICAL_POLICY,
    DEFAULT_POLICY,
    Polarity,
    assert_same_shape,
    load_mask,
    write_mask,
)
from .metrics import (
    ConfusionCounts,
    MetricDescriptor,
    Orientation,
    Preprocess,
    confusion,
    dice,
    evaluate_pair,
    f1,
    hausdorff,
    iou,
    nearest_distances,
    parse_metric,
    parse_metric_list,
    phd,
    phd_from_distances,
)
from .skeletonize import Skeleton, skeleton_to_mask, thin

__version__ = "0.1.0"

__all__ = [
    "BinarizationPolicy",
    "BinaryMask",
    "CANONICAL_POLICY",
    "ConfusionCounts",
    "DEFAULT_POLICY",
    "DistanceField",
    "MetricDescriptor",
    "Orientation",
    "Polarity",
    "Preprocess",
    "Skeleton",
    "assert_same_shape",
    "brute_force_edt",
    "confusion",
    "dice",
    "evaluate_pair",
    "exact_edt",
    "f1",
    "hausdorff",
    "iou",
    "load_mask",
    "nearest_distances",
    "parse_metric",
    "parse_metric_list",
    "phd",
    "phd_from_distances",
    "sample_min_distances",
    "skeleton_to_mask",
    "thin",
    "write_mask",
]
