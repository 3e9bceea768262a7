"""Exception types shared across the toolkit."""


class PhdEvalError(Exception):
    """Base class for all toolkit errors."""


class DecodeError(PhdEvalError):
    """File exists but does not decode as a supported raster image."""


class ZeroDimensionError(PhdEvalError):
    """Image has a zero width or height."""


class ShapeMismatchError(PhdEvalError):
    """Two masks that must share a shape do not."""

    def __init__(self, shape_a, shape_b):
        self.shape_a = tuple(shape_a)
        self.shape_b = tuple(shape_b)
        super().__init__(f"shape mismatch: {self.shape_a} vs {self.shape_b}")


class EmptyMaskError(PhdEvalError):
    """Mask has no foreground pixel where at least one is required."""


class OutOfBoundsError(PhdEvalError):
    """A query point lies outside the field it is sampled from."""


class EmptySkeletonError(PhdEvalError):
    """A skeleton that must be nonempty is empty; names the offending side."""

    def __init__(self, side):
        self.side = side
        super().__init__(f"skeleton '{side}' is empty")


class NonFiniteScoreError(PhdEvalError):
    """A metric score is NaN or infinite where a finite value is required."""


class VoteLogError(PhdEvalError):
    """A vote-log line violates the schema; carries the 1-based line number."""

    def __init__(self, line_no, message):
        self.line_no = line_no
        super().__init__(f"vote log line {line_no}: {message}")


class DuplicateVoteError(PhdEvalError):
    """Two votes exist for the same (group_id, subject_id) pair."""

    def __init__(self, group_id, subject_id):
        self.group_id = group_id
        self.subject_id = subject_id
        super().__init__(f"duplicate vote for group {group_id!r} by subject {subject_id!r}")


class MissingScoresError(PhdEvalError):
    """A valid group lacks scores for the metric under analysis."""

    def __init__(self, group_id, metric):
        self.group_id = group_id
        self.metric = metric
        super().__init__(f"group {group_id!r} has no scores for metric {metric!r}")


class ManifestError(PhdEvalError):
    """A group manifest entry is malformed."""


class ManifestMismatchError(PhdEvalError):
    """Prediction and ground-truth directories do not pair up; lists the leftovers."""

    def __init__(self, unmatched):
        self.unmatched = list(unmatched)
        listing = ", ".join(str(u) for u in self.unmatched)
        super().__init__(f"unmatched files: {listing}")
