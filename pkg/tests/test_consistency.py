import json
from datetime import datetime, timezone
from fractions import Fraction

import pytest

from phdeval.consistency import (
    Choice,
    ConsistencyEntry,
    GroupVerdict,
    Preference,
    TripletGroup,
    VoteRecord,
    append_vote,
    consistency,
    invalid_group_ids,
    metric_preference,
    read_manifest,
    read_votes,
    score_groups,
    sweep_tolerance,
    tally_all,
    tally_group,
)
from phdeval.errors import (
    DuplicateVoteError,
    ManifestError,
    MissingScoresError,
    NonFiniteScoreError,
    VoteLogError,
)
from phdeval.mask_io import BinarizationPolicy, Polarity
from phdeval.metrics import parse_metric

import study_fixture

TS = datetime(2024, 5, 1, 10, 0, tzinfo=timezone.utc)
LIGHT = BinarizationPolicy(threshold=128, polarity=Polarity.LIGHT_IS_FOREGROUND)


def votes_for(gid, a=0, b=0, difficult=0):
    out = []
    n = 0
    for choice, count in ((Choice.PRED_A, a), (Choice.PRED_B, b), (Choice.DIFFICULT, difficult)):
        for _ in range(count):
            n += 1
            out.append(VoteRecord(group_id=gid, subject_id=f"s{n:02d}", choice=choice, ts=TS))
    return out


class TestTally:
    def test_clear_majority(self):
        v = tally_group(votes_for("g", a=12, b=5, difficult=3), 11)
        assert v.valid and v.majority is Choice.PRED_A
        assert v.tally == {Choice.PRED_A: 12, Choice.PRED_B: 5, Choice.DIFFICULT: 3}

    def test_ten_ten_split_is_invalid(self):
        v = tally_group(votes_for("g", a=10, b=10), 11)
        assert not v.valid and v.majority is None

    def test_all_difficult_is_a_valid_difficult_majority(self):
        v = tally_group(votes_for("g", difficult=20), 11)
        assert v.valid and v.majority is Choice.DIFFICULT

    def test_tie_at_or_above_threshold_is_invalid(self):
        v = tally_group(votes_for("g", a=11, b=11), 11)
        assert not v.valid and v.majority is None

    def test_duplicate_subject_rejected(self):
        votes = votes_for("g", a=2)
        votes.append(VoteRecord("g", "s01", Choice.PRED_B, TS))
        with pytest.raises(DuplicateVoteError):
            tally_group(votes, 11)

    def test_mixed_groups_rejected(self):
        votes = votes_for("g", a=1) + votes_for("other", b=1)
        with pytest.raises(ValueError):
            tally_group(votes, 11)

    def test_threshold_is_configurable(self):
        votes = votes_for("g", a=3, b=1)
        assert tally_group(votes, 3).valid
        assert not tally_group(votes, 4).valid


class TestPreference:
    F1 = parse_metric("f1")
    PHD3 = parse_metric("phd:3")

    def test_higher_better(self):
        assert metric_preference(0.9, 0.7, self.F1) is Preference.PRED_A

    def test_lower_better(self):
        assert metric_preference(1.2, 0.8, self.PHD3) is Preference.PRED_B

    def test_exact_tie(self):
        assert metric_preference(0.5, 0.5, self.F1) is Preference.TIE

    def test_epsilon_tie(self):
        assert metric_preference(0.50, 0.51, self.F1, tie_epsilon=0.02) is Preference.TIE
        assert metric_preference(0.50, 0.53, self.F1, tie_epsilon=0.02) is Preference.PRED_B

    def test_non_finite_rejected(self):
        with pytest.raises(NonFiniteScoreError):
            metric_preference(float("nan"), 0.5, self.F1)


def group_with_scores(gid, f1_a, f1_b):
    g = TripletGroup(group_id=gid, gt=f"{gid}/gt.png", pred_a=f"{gid}/a.png", pred_b=f"{gid}/b.png")
    g.scores["f1"] = (f1_a, f1_b)
    return g


class TestConsistency:
    def test_one_match_of_three(self):
        groups = [
            group_with_scores("g1", 0.9, 0.1),  # prefers A
            group_with_scores("g2", 0.1, 0.9),  # prefers B
            group_with_scores("g3", 0.2, 0.8),  # prefers B
        ]
        verdicts = {
            "g1": tally_group(votes_for("g1", a=15, b=5), 11),  # majority A -> match
            "g2": tally_group(votes_for("g2", a=15, b=5), 11),  # majority A -> mismatch
            "g3": tally_group(votes_for("g3", a=12, b=8), 11),  # majority A -> mismatch
        }
        entry = consistency(groups, verdicts, parse_metric("f1"))
        assert (entry.matched, entry.valid) == (1, 3)
        assert entry.ratio == Fraction(1, 3)
        assert entry.percent == "33.33%"

    def test_all_match_is_100_percent(self):
        groups = [group_with_scores(f"g{i}", 0.9, 0.1) for i in range(4)]
        verdicts = {f"g{i}": tally_group(votes_for(f"g{i}", a=20), 11) for i in range(4)}
        entry = consistency(groups, verdicts, parse_metric("f1"))
        assert (entry.matched, entry.valid) == (4, 4)
        assert entry.percent == "100.00%"

    def test_difficult_majority_matches_only_tie(self):
        tie_group = group_with_scores("g1", 0.5, 0.5)
        pref_group = group_with_scores("g2", 0.9, 0.1)
        verdicts = {
            "g1": tally_group(votes_for("g1", difficult=20), 11),
            "g2": tally_group(votes_for("g2", difficult=20), 11),
        }
        entry = consistency([tie_group, pref_group], verdicts, parse_metric("f1"))
        assert (entry.matched, entry.valid) == (1, 2)

    def test_invalid_groups_are_excluded_without_side_effects(self):
        groups = [group_with_scores("g1", 0.9, 0.1), group_with_scores("g2", 0.9, 0.1)]
        verdicts = {
            "g1": tally_group(votes_for("g1", a=15), 11),
            "g2": tally_group(votes_for("g2", a=10, b=10), 11),
        }
        with_invalid = consistency(groups, verdicts, parse_metric("f1"))
        alone = consistency(groups[:1], {"g1": verdicts["g1"]}, parse_metric("f1"))
        assert (with_invalid.matched, with_invalid.valid) == (alone.matched, alone.valid) == (1, 1)
        assert invalid_group_ids(groups, verdicts) == ["g2"]

    def test_missing_scores_raises_with_group_name(self):
        group = TripletGroup(group_id="g9", gt="g/gt.png", pred_a="g/a.png", pred_b="g/b.png")
        verdicts = {"g9": tally_group(votes_for("g9", a=20), 11)}
        with pytest.raises(MissingScoresError, match="g9"):
            consistency([group], verdicts, parse_metric("f1"))

    def test_paper_percentage_anchors(self):
        # 113 valid groups reproduce the paper's reported percentages exactly
        assert ConsistencyEntry("f1", 39, 113).percent == "34.51%"
        assert ConsistencyEntry("iou", 40, 113).percent == "35.40%"
        assert ConsistencyEntry("f1", 39, 113).ratio_str == "39/113"


class TestVoteLog:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "votes.jsonl"
        records = votes_for("g1", a=2, difficult=1)
        for r in records:
            append_vote(path, r)
        assert read_votes(path) == records

    def test_append_is_plain_jsonl(self, tmp_path):
        path = tmp_path / "votes.jsonl"
        append_vote(path, VoteRecord("g1", "s01", Choice.PRED_A, TS))
        line = path.read_text().strip()
        assert json.loads(line) == {
            "group_id": "g1",
            "subject_id": "s01",
            "choice": "A",
            "ts": "2024-05-01T10:00:00Z",
        }

    def test_schema_violation_names_line(self, tmp_path):
        path = tmp_path / "votes.jsonl"
        path.write_text('{"group_id":"g","subject_id":"s","choice":"A","ts":"2024-05-01T10:00:00Z"}\nnot json\n')
        with pytest.raises(VoteLogError, match="line 2"):
            read_votes(path)

    def test_bad_choice_names_line(self, tmp_path):
        path = tmp_path / "votes.jsonl"
        path.write_text('{"group_id":"g","subject_id":"s","choice":"C","ts":"2024-05-01T10:00:00Z"}\n')
        with pytest.raises(VoteLogError, match="line 1"):
            read_votes(path)

    def test_duplicate_pair_rejected(self, tmp_path):
        path = tmp_path / "votes.jsonl"
        record = VoteRecord("g1", "s01", Choice.PRED_A, TS)
        append_vote(path, record)
        append_vote(path, VoteRecord("g1", "s01", Choice.PRED_B, TS))
        with pytest.raises(DuplicateVoteError, match="g1.*s01"):
            read_votes(path)

    def test_replay_equals_incremental(self, tmp_path):
        # event sourcing: appending one vote at a time and replaying the file
        # after each append always equals the in-memory tally so far
        path = tmp_path / "votes.jsonl"
        records = votes_for("g1", a=12, b=5, difficult=3) + votes_for("g2", b=11)
        so_far = []
        for r in records:
            append_vote(path, r)
            so_far.append(r)
            assert tally_all(read_votes(path), 11) == tally_all(so_far, 11)


class TestManifest:
    def test_parse_and_path_resolution(self, tmp_path):
        (tmp_path / "m.json").write_text(
            json.dumps(
                [
                    {"group_id": "g1", "gt": "img/gt.png", "pred_a": "img/a.png", "pred_b": "img/b.png"},
                    {
                        "group_id": "g2",
                        "gt": "gt2.png",
                        "pred_a": "a2.png",
                        "pred_b": "b2.png",
                        "scores": {"f1": [0.5, 0.25]},
                    },
                ]
            )
        )
        groups = read_manifest(tmp_path / "m.json")
        assert [g.group_id for g in groups] == ["g1", "g2"]
        assert groups[0].gt == tmp_path / "img/gt.png"
        assert groups[1].scores == {"f1": (0.5, 0.25)}

    def test_identical_paths_rejected(self):
        with pytest.raises(ManifestError):
            TripletGroup(group_id="g", gt="x.png", pred_a="x.png", pred_b="y.png")

    def test_duplicate_group_id_rejected(self, tmp_path):
        entry = {"group_id": "g1", "gt": "gt.png", "pred_a": "a.png", "pred_b": "b.png"}
        (tmp_path / "m.json").write_text(json.dumps([entry, entry]))
        with pytest.raises(ManifestError):
            read_manifest(tmp_path / "m.json")


class TestScoringAndSweep:
    def test_scripted_fixture_scores_by_hand(self, tmp_path):
        manifest_path, votes_path = study_fixture.build_study_fixture(tmp_path)
        groups = read_manifest(manifest_path)
        verdicts = tally_all(read_votes(votes_path), 11)
        score_groups(groups, [parse_metric("f1"), parse_metric("phd:0")], LIGHT)
        by_id = {g.group_id: g for g in groups}
        assert by_id["g1"].scores["f1"] == (1.0, 0.0)
        assert by_id["g1"].scores["phd:0"] == (0.0, 4.0)  # row 10 is 2px off: 2 + 2
        assert by_id["g3"].scores["phd:0"][0] == by_id["g3"].scores["phd:0"][1] == 2.0
        for metric in ("f1", "phd:0"):
            entry = consistency(groups, verdicts, parse_metric(metric))
            assert (entry.matched, entry.valid) == (study_fixture.MATCHED, study_fixture.VALID)
            assert entry.ratio_str == study_fixture.RATIO_STR
            assert entry.percent == study_fixture.PERCENT

    def test_sweep_single_tolerance_equals_consistency(self, tmp_path):
        manifest_path, votes_path = study_fixture.build_study_fixture(tmp_path)
        groups = read_manifest(manifest_path)
        verdicts = tally_all(read_votes(votes_path), 11)
        score_groups(groups, [parse_metric("phd:0")], LIGHT)
        curve = sweep_tolerance(groups, verdicts, [0.0])
        assert len(curve) == 1
        t, entry = curve[0]
        assert t == 0.0
        direct = consistency(groups, verdicts, parse_metric("phd:0"))
        assert (entry.matched, entry.valid) == (direct.matched, direct.valid)

    def test_sweep_crossover_where_phd_hits_zero(self, tmp_path):
        # one group: pred_a == gt, pred_b is the gt shifted 2px.  Humans pick A.
        # For t < 2 the metric prefers a (phd 0 vs 4) -> match; at t >= 2 both
        # scores are 0 -> tie -> no longer matches the A majority.
        from phdeval import write_mask
        from study_fixture import line_mask

        img = tmp_path / "img"
        img.mkdir()
        write_mask(line_mask(8), img / "gt.png")
        write_mask(line_mask(8), img / "a.png")
        write_mask(line_mask(10), img / "b.png")
        manifest = tmp_path / "m.json"
        manifest.write_text(
            json.dumps([{"group_id": "g", "gt": "img/gt.png", "pred_a": "img/a.png", "pred_b": "img/b.png"}])
        )
        groups = read_manifest(manifest)
        verdicts = {"g": tally_group(votes_for("g", a=20), 11)}
        tolerances = [0.0, 1.0, 1.9, 2.0, 3.0]
        score_groups(groups, [parse_metric(f"phd:{t}") for t in tolerances], LIGHT)
        curve = sweep_tolerance(groups, verdicts, tolerances)
        ratios = [entry.matched for _, entry in curve]
        assert ratios == [1, 1, 1, 0, 0]
