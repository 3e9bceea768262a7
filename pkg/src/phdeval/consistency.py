"""Human-consistency analysis over triplet groups.

Subjects vote on groups of three images (ground truth plus two candidate
segmentations).  A group is valid when its top choice reaches the validity
threshold (default 11 of 20, i.e. "more than 10") with a unique argmax.
A metric is consistent with a valid group when the candidate it prefers
matches the human majority; a Difficult-to-choose majority matches only a
metric tie.  Votes live in an append-only JSON-lines log and every verdict
is derived by replaying that log, never from mutable tally state.
"""

from __future__ import annotations

import enum
import json
import math
import os
from dataclasses import dataclass, field
from datetime import datetime, timezone
from fractions import Fraction
from pathlib import Path

from .errors import (
    DuplicateVoteError,
    ManifestError,
    MissingScoresError,
    NonFiniteScoreError,
    VoteLogError,
)
from .mask_io import BinarizationPolicy, DEFAULT_POLICY, load_mask
from .metrics import MetricDescriptor, Orientation, evaluate_pair


class Choice(enum.Enum):
    PRED_A = "A"
    PRED_B = "B"
    DIFFICULT = "difficult"


class Preference(enum.Enum):
    """What a metric's two scores say about a group."""

    PRED_A = "A"
    PRED_B = "B"
    TIE = "tie"


@dataclass(frozen=True)
class VoteRecord:
    """One subject's choice on one triplet group."""

    group_id: str
    subject_id: str
    choice: Choice
    ts: datetime

    def to_json_line(self) -> str:
        return json.dumps(
            {
                "group_id": self.group_id,
                "subject_id": self.subject_id,
                "choice": self.choice.value,
                "ts": self.ts.isoformat().replace("+00:00", "Z"),
            },
            separators=(",", ":"),
        )


@dataclass
class TripletGroup:
    """Ground truth plus two candidate segmentations, optionally pre-scored.

    ``scores`` maps metric name -> (score_for_pred_a, score_for_pred_b).
    """

    group_id: str
    gt: Path
    pred_a: Path
    pred_b: Path
    scores: dict[str, tuple[float, float]] = field(default_factory=dict)

    def __post_init__(self):
        paths = {str(self.gt), str(self.pred_a), str(self.pred_b)}
        if len(paths) != 3:
            raise ManifestError(f"group {self.group_id!r}: the three paths must be distinct")


@dataclass(frozen=True)
class GroupVerdict:
    """Aggregated tally of one group: counts, validity, and the majority if unique."""

    group_id: str
    tally: dict[Choice, int]
    valid: bool
    majority: Choice | None


@dataclass(frozen=True)
class ConsistencyEntry:
    """One metric's agreement with the human majorities over the valid groups."""

    metric: str
    matched: int
    valid: int

    @property
    def ratio(self) -> Fraction:
        return Fraction(self.matched, self.valid) if self.valid else Fraction(0)

    @property
    def ratio_str(self) -> str:
        return f"{self.matched}/{self.valid}"

    @property
    def percent(self) -> str:
        if self.valid == 0:
            return "n/a"
        return f"{100.0 * self.matched / self.valid:.2f}%"


def parse_timestamp(raw: str) -> datetime:
    ts = datetime.fromisoformat(raw.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def read_votes(path) -> list[VoteRecord]:
    """Parse a JSON-lines vote log; schema violations name the line number."""
    votes = []
    seen: set[tuple[str, str]] = set()
    with open(path, encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise VoteLogError(line_no, f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise VoteLogError(line_no, "vote must be a JSON object")
            try:
                choice = Choice(obj["choice"])
                record = VoteRecord(
                    group_id=str(obj["group_id"]),
                    subject_id=str(obj["subject_id"]),
                    choice=choice,
                    ts=parse_timestamp(str(obj["ts"])),
                )
            except KeyError as exc:
                raise VoteLogError(line_no, f"missing field {exc}") from exc
            except ValueError as exc:
                raise VoteLogError(line_no, str(exc)) from exc
            key = (record.group_id, record.subject_id)
            if key in seen:
                raise DuplicateVoteError(record.group_id, record.subject_id)
            seen.add(key)
            votes.append(record)
    return votes


def append_vote(path, record: VoteRecord) -> None:
    """Durably append one vote: the fsync completes before this returns."""
    line = record.to_json_line() + "\n"
    with open(path, "a", encoding="utf-8") as fh:
        fh.write(line)
        fh.flush()
        os.fsync(fh.fileno())


def read_manifest(path) -> list[TripletGroup]:
    """Parse a group manifest: JSON array of {group_id, gt, pred_a, pred_b}.

    Entries may carry an optional "scores" object mapping metric name to
    the [pred_a, pred_b] score pair.  Relative paths resolve against the
    manifest's directory.
    """
    path = Path(path)
    base = path.parent
    with open(path, encoding="utf-8") as fh:
        data = json.load(fh)
    if not isinstance(data, list):
        raise ManifestError("manifest must be a JSON array")
    groups = []
    seen_ids = set()
    for i, entry in enumerate(data):
        if not isinstance(entry, dict):
            raise ManifestError(f"manifest entry {i} must be an object")
        try:
            gid = str(entry["group_id"])
            group = TripletGroup(
                group_id=gid,
                gt=base / entry["gt"],
                pred_a=base / entry["pred_a"],
                pred_b=base / entry["pred_b"],
            )
        except KeyError as exc:
            raise ManifestError(f"manifest entry {i}: missing field {exc}") from exc
        if gid in seen_ids:
            raise ManifestError(f"duplicate group_id {gid!r}")
        seen_ids.add(gid)
        for name, pair in entry.get("scores", {}).items():
            group.scores[str(name)] = (float(pair[0]), float(pair[1]))
        groups.append(group)
    return groups


DEFAULT_VALIDITY_THRESHOLD = 11  # "more than 10 votes" out of a 20-subject panel


def tally_group(votes: list[VoteRecord], validity_threshold: int = DEFAULT_VALIDITY_THRESHOLD) -> GroupVerdict:
    """Aggregate one group's votes into a verdict.

    Valid iff the top count reaches the threshold with a unique argmax;
    a tie at or above threshold has no unique majority and is invalid.
    """
    if not votes:
        return GroupVerdict(group_id="", tally={c: 0 for c in Choice}, valid=False, majority=None)
    gid = votes[0].group_id
    tally = {c: 0 for c in Choice}
    seen_subjects = set()
    for v in votes:
        if v.group_id != gid:
            raise ValueError(f"votes span groups {gid!r} and {v.group_id!r}")
        if v.subject_id in seen_subjects:
            raise DuplicateVoteError(gid, v.subject_id)
        seen_subjects.add(v.subject_id)
        tally[v.choice] += 1
    top = max(tally.values())
    winners = [c for c, n in tally.items() if n == top]
    valid = top >= validity_threshold and len(winners) == 1
    return GroupVerdict(group_id=gid, tally=tally, valid=valid, majority=winners[0] if valid else None)


def tally_all(votes: list[VoteRecord], validity_threshold: int = DEFAULT_VALIDITY_THRESHOLD) -> dict[str, GroupVerdict]:
    """Replay a vote log into one verdict per group, keyed by group_id."""
    by_group: dict[str, list[VoteRecord]] = {}
    for v in votes:
        by_group.setdefault(v.group_id, []).append(v)
    return {gid: tally_group(vs, validity_threshold) for gid, vs in by_group.items()}


def metric_preference(score_a: float, score_b: float, desc: MetricDescriptor, tie_epsilon: float = 0.0) -> Preference:
    """Which candidate a metric prefers; Tie when the scores differ by <= epsilon."""
    if tie_epsilon < 0:
        raise ValueError(f"tie_epsilon must be >= 0, got {tie_epsilon}")
    if not (math.isfinite(score_a) and math.isfinite(score_b)):
        raise NonFiniteScoreError(f"scores must be finite, got ({score_a}, {score_b})")
    if abs(score_a - score_b) <= tie_epsilon:
        return Preference.TIE
    if desc.orientation is Orientation.HIGHER_IS_BETTER:
        return Preference.PRED_A if score_a > score_b else Preference.PRED_B
    return Preference.PRED_A if score_a < score_b else Preference.PRED_B


_MATCHES = {
    Choice.PRED_A: Preference.PRED_A,
    Choice.PRED_B: Preference.PRED_B,
    Choice.DIFFICULT: Preference.TIE,
}


def consistency(
    groups: list[TripletGroup],
    verdicts: dict[str, GroupVerdict],
    desc: MetricDescriptor,
    tie_epsilon: float = 0.0,
) -> ConsistencyEntry:
    """Fraction of valid groups where the metric's preference equals the majority."""
    matched = 0
    valid = 0
    for group in groups:
        verdict = verdicts.get(group.group_id)
        if verdict is None or not verdict.valid:
            continue
        if desc.name not in group.scores:
            raise MissingScoresError(group.group_id, desc.name)
        valid += 1
        score_a, score_b = group.scores[desc.name]
        if metric_preference(score_a, score_b, desc, tie_epsilon) is _MATCHES[verdict.majority]:
            matched += 1
    return ConsistencyEntry(metric=desc.name, matched=matched, valid=valid)


def invalid_group_ids(groups: list[TripletGroup], verdicts: dict[str, GroupVerdict]) -> list[str]:
    """Groups excluded from the analysis: invalid tallies or no votes at all."""
    out = []
    for group in groups:
        verdict = verdicts.get(group.group_id)
        if verdict is None or not verdict.valid:
            out.append(group.group_id)
    return out


def sweep_tolerance(
    groups: list[TripletGroup],
    verdicts: dict[str, GroupVerdict],
    tolerances: list[float],
    tie_epsilon: float = 0.0,
) -> list[tuple[float, ConsistencyEntry]]:
    """Consistency at each PHD tolerance, one row per tolerance.

    Expects every group to carry "phd:<t>" scores for each requested t
    (scoring shares one skeleton/distance-field pass across tolerances,
    see score_groups).
    """
    curve = []
    for t in tolerances:
        desc = MetricDescriptor(kind="phd", tolerance=float(t))
        curve.append((float(t), consistency(groups, verdicts, desc, tie_epsilon)))
    return curve


def score_groups(
    groups: list[TripletGroup],
    descriptors: list[MetricDescriptor],
    policy: BinarizationPolicy = DEFAULT_POLICY,
    only_group_ids: set[str] | None = None,
) -> None:
    """Compute missing scores in-place from each group's images.

    Descriptors already present in a group's manifest scores are kept.
    Skeletonization and the PHD distance fields are computed once per
    candidate and shared across all configured tolerances (evaluate_pair
    caches them), which is what makes tolerance sweeps affordable.
    Per-metric failures simply leave that score absent; consistency()
    raises MissingScoresError when a valid group needs it.
    """
    for group in groups:
        if only_group_ids is not None and group.group_id not in only_group_ids:
            continue
        missing = [d for d in descriptors if d.name not in group.scores]
        if not missing:
            continue
        gt = load_mask(group.gt, policy)
        report_a = evaluate_pair(load_mask(group.pred_a, policy), gt, missing)
        report_b = evaluate_pair(load_mask(group.pred_b, policy), gt, missing)
        for desc in missing:
            va = report_a[desc.name]
            vb = report_b[desc.name]
            if va.ok and vb.ok:
                group.scores[desc.name] = (va.value, vb.value)


def report_dict(
    entries: list[ConsistencyEntry],
    excluded: list[str],
    config: dict,
    sweep: list[tuple[float, ConsistencyEntry]] | None = None,
) -> dict:
    """Assemble the JSON-shaped consistency report (exact rationals included)."""
    out = {
        "config": config,
        "metrics": [
            {
                "metric": e.metric,
                "matched": e.matched,
                "valid": e.valid,
                "ratio": e.ratio_str,
                "decimal": (e.matched / e.valid) if e.valid else None,
                "percent": e.percent,
            }
            for e in entries
        ],
        "excluded_groups": list(excluded),
    }
    if sweep is not None:
        out["sweep"] = [
            {
                "tolerance": t,
                "matched": e.matched,
                "valid": e.valid,
                "ratio": e.ratio_str,
                "decimal": (e.matched / e.valid) if e.valid else None,
                "percent": e.percent,
            }
            for t, e in sweep
        ]
    return out


def write_reports(
    out_dir,
    entries: list[ConsistencyEntry],
    excluded: list[str],
    config: dict,
    sweep: list[tuple[float, ConsistencyEntry]] | None = None,
) -> dict:
    """Write consistency.csv / consistency.json (and sweep.csv) under out_dir."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    data = report_dict(entries, excluded, config, sweep)

    header = [f"# {k}={json.dumps(v, sort_keys=True)}" for k, v in config.items()]
    lines = list(header)
    lines.append("metric,matched,valid,ratio,decimal,percent")
    for e in entries:
        decimal = repr(e.matched / e.valid) if e.valid else ""
        lines.append(f"{e.metric},{e.matched},{e.valid},{e.ratio_str},{decimal},{e.percent}")
    lines.append(f"excluded_groups,{';'.join(excluded)}")
    (out_dir / "consistency.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    (out_dir / "consistency.json").write_text(
        json.dumps(data, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )

    if sweep is not None:
        lines = list(header)
        lines.append("tolerance,matched,valid,ratio,decimal,percent")
        for t, e in sweep:
            decimal = repr(e.matched / e.valid) if e.valid else ""
            lines.append(f"{t:g},{e.matched},{e.valid},{e.ratio_str},{decimal},{e.percent}")
        (out_dir / "sweep.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return data

