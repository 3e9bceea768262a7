"""Operator-facing command line.

    phdeval evaluate  --gt DIR --pred NAME=DIR ... --metrics f1,iou,dice,phd:0 --out DIR
    phdeval skeletonize IN OUT
    phdeval consistency --manifest F --votes F [--sweep A..B:S] --out DIR
    phdeval study serve --manifest F --votes F --bind HOST:PORT
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import batch, consistency as cons
from .errors import PhdEvalError
from .mask_io import BinarizationPolicy, Polarity, load_mask, write_mask
from .metrics import Preprocess, MetricDescriptor, parse_metric_list
from .skeletonize import skeleton_to_mask, thin


def _policy_from_args(args) -> BinarizationPolicy:
    polarity = Polarity.DARK_IS_FOREGROUND if args.polarity == "dark" else Polarity.LIGHT_IS_FOREGROUND
    return BinarizationPolicy(threshold=args.threshold, polarity=polarity)


def _add_policy_args(parser):
    parser.add_argument(
        "--polarity",
        choices=("dark", "light"),
        default="dark",
        help="which side of the threshold is foreground (default: dark strokes)",
    )
    parser.add_argument("--threshold", type=int, default=128, help="binarization gray threshold")


def _parse_sweep(spec: str) -> list[float]:
    """Parse "A..B:S" into the inclusive tolerance grid A, A+S, ..., <=B."""
    try:
        bounds, _, step_s = spec.partition(":")
        lo_s, _, hi_s = bounds.partition("..")
        lo, hi, step = float(lo_s), float(hi_s), float(step_s)
    except ValueError as exc:
        raise SystemExit(f"bad --sweep spec {spec!r}, expected A..B:S") from exc
    if step <= 0 or hi < lo:
        raise SystemExit(f"bad --sweep spec {spec!r}: need step > 0 and B >= A")
    out = []
    t = lo
    while t <= hi + 1e-9:
        out.append(round(t, 9))
        t += step
    return out


def cmd_evaluate(args) -> int:
    preds = {}
    for spec in args.pred:
        name, sep, directory = spec.partition("=")
        if not sep or not name or not directory:
            raise SystemExit(f"bad --pred spec {spec!r}, expected NAME=DIR")
        preds[name] = Path(directory)
    metrics = parse_metric_list(args.metrics)
    if args.sk:
        for desc in list(metrics):
            if desc.kind != "phd" and desc.preprocess is Preprocess.NONE:
                metrics.append(MetricDescriptor(kind=desc.kind, preprocess=Preprocess.SKELETONIZE_BOTH))
    pairs = {}
    if args.pairs:
        pairs = {str(k): str(v) for k, v in json.loads(Path(args.pairs).read_text()).items()}
    job = batch.EvalJob(
        gt_dir=Path(args.gt),
        pred_dirs=preds,
        metrics=metrics,
        out_dir=Path(args.out),
        policy=_policy_from_args(args),
        jobs=args.jobs,
        pairs=pairs,
    )
    report, any_failed = batch.run_job(job)
    for failure in report["failures"]:
        print(
            f"FAILED {failure['method']}/{failure['image']} {failure['metric']}: {failure['error']}",
            file=sys.stderr,
        )
    print(f"wrote {job.out_dir / 'per_image.csv'}, {job.out_dir / 'aggregate.csv'}, {job.out_dir / 'report.json'}")
    return 2 if any_failed else 0


def cmd_skeletonize(args) -> int:
    mask = load_mask(args.input, _policy_from_args(args))
    write_mask(skeleton_to_mask(thin(mask)), args.output)
    return 0


def cmd_consistency(args) -> int:
    groups = cons.read_manifest(args.manifest)
    votes = cons.read_votes(args.votes)
    verdicts = cons.tally_all(votes, args.validity_threshold)
    valid_ids = {gid for gid, v in verdicts.items() if v.valid}
    metrics = parse_metric_list(args.metrics)
    policy = _policy_from_args(args)

    sweep_ts = _parse_sweep(args.sweep) if args.sweep else None
    to_score = list(metrics)
    if sweep_ts:
        to_score += [MetricDescriptor(kind="phd", tolerance=t) for t in sweep_ts]
    cons.score_groups(groups, to_score, policy, only_group_ids=valid_ids)

    entries = [cons.consistency(groups, verdicts, d, args.tie_epsilon) for d in metrics]
    sweep = cons.sweep_tolerance(groups, verdicts, sweep_ts, args.tie_epsilon) if sweep_ts else None
    config = {
        "manifest": str(args.manifest),
        "votes": str(args.votes),
        "metrics": [d.name for d in metrics],
        "validity_threshold": args.validity_threshold,
        "tie_epsilon": args.tie_epsilon,
        "threshold": policy.threshold,
        "polarity": policy.polarity.value,
        "sweep": args.sweep,
    }
    data = cons.write_reports(Path(args.out), entries, cons.invalid_group_ids(groups, verdicts), config, sweep)
    for row in data["metrics"]:
        print(f"{row['metric']}: {row['ratio']} = {row['percent']}")
    print(f"wrote reports to {args.out}")
    return 0


def cmd_study_serve(args) -> int:
    from .service import create_app, serve

    host, _, port_s = args.bind.rpartition(":")
    if not host or not port_s.isdigit():
        raise SystemExit(f"bad --bind {args.bind!r}, expected HOST:PORT")
    app = create_app(
        manifest_path=args.manifest,
        votes_path=args.votes,
        seed=args.seed,
        batch_size=args.batch_size,
        metrics=parse_metric_list(args.metrics),
        policy=_policy_from_args(args),
        validity_threshold=args.validity_threshold,
        tie_epsilon=args.tie_epsilon,
        ui_dir=args.ui,
    )
    serve(app, host, int(port_s))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phdeval", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("evaluate", help="score prediction directories against ground truth")
    p.add_argument("--gt", required=True, help="ground-truth directory")
    p.add_argument("--pred", action="append", required=True, metavar="NAME=DIR", help="one per method")
    p.add_argument("--metrics", default="f1,iou,dice,phd:0,phd:1,phd:3,phd:5")
    p.add_argument("--sk", action="store_true", help="also compute skeletonized pixel-metric variants")
    p.add_argument("--out", required=True, help="output directory for reports")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers over image pairs")
    p.add_argument("--pairs", help="JSON file mapping prediction stem -> ground-truth stem")
    _add_policy_args(p)
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("skeletonize", help="thin a mask image and write the skeleton mask")
    p.add_argument("input")
    p.add_argument("output")
    _add_policy_args(p)
    p.set_defaults(func=cmd_skeletonize)

    p = sub.add_parser("consistency", help="agreement of metrics with human majority votes")
    p.add_argument("--manifest", required=True)
    p.add_argument("--votes", required=True)
    p.add_argument("--metrics", default="f1,iou,dice,phd:0,phd:1,phd:3,phd:5")
    p.add_argument("--sweep", help="PHD tolerance sweep A..B:S")
    p.add_argument("--tie-epsilon", type=float, default=0.0, dest="tie_epsilon")
    p.add_argument("--validity-threshold", type=int, default=11, dest="validity_threshold")
    p.add_argument("--out", default="consistency_out")
    _add_policy_args(p)
    p.set_defaults(func=cmd_consistency)

    p_study = sub.add_parser("study", help="human study service")
    study_sub = p_study.add_subparsers(dest="study_command", required=True)
    p = study_sub.add_parser("serve", help="host the vote-collection HTTP API")
    p.add_argument("--manifest", required=True)
    p.add_argument("--votes", required=True)
    p.add_argument("--bind", default="127.0.0.1:8000")
    p.add_argument("--seed", type=int, default=0, help="per-subject order/label shuffle seed")
    p.add_argument("--batch-size", type=int, default=None, dest="batch_size")
    p.add_argument("--metrics", default="f1,iou,dice,phd:0,phd:1,phd:3,phd:5")
    p.add_argument("--tie-epsilon", type=float, default=0.0, dest="tie_epsilon")
    p.add_argument("--validity-threshold", type=int, default=11, dest="validity_threshold")
    p.add_argument("--ui", help="directory of built study UI to serve at /")
    _add_policy_args(p)
    p.set_defaults(func=cmd_study_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PhdEvalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except FileNotFoundError as exc:
        print(f"error: file not found: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
