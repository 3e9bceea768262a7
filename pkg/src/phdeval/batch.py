"""Batch evaluation: score one or more prediction directories against a
ground-truth directory and emit per-image plus Table-style aggregate reports.

Pairing is by identical file stem; a --pairs JSON mapping (prediction stem
-> ground-truth stem) overrides mismatched naming.  Work parallelizes over
image pairs with results assembled in a fixed order, so reports are
byte-identical for any worker count.
"""

from __future__ import annotations

import json
import multiprocessing
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ManifestMismatchError
from .mask_io import BinarizationPolicy, DEFAULT_POLICY, load_mask
from .metrics import MetricDescriptor, Orientation, evaluate_pair, parse_metric

IMAGE_EXTENSIONS = (".png", ".bmp", ".tif", ".tiff", ".jpg", ".jpeg")


@dataclass
class EvalJob:
    """Everything one evaluation run needs, resolved and validated up front."""

    gt_dir: Path
    pred_dirs: dict[str, Path]  # method name -> directory
    metrics: list[MetricDescriptor]
    out_dir: Path
    policy: BinarizationPolicy = DEFAULT_POLICY
    jobs: int = 1
    pairs: dict[str, str] = field(default_factory=dict)  # pred stem -> gt stem

    def config_dict(self) -> dict:
        """Effective configuration logged into every report header.

        The parallelism degree is deliberately absent: reports must be
        byte-identical for 1 or N workers.
        """
        return {
            "gt_dir": str(self.gt_dir),
            "pred_dirs": {name: str(d) for name, d in self.pred_dirs.items()},
            "metrics": [d.name for d in self.metrics],
            "threshold": self.policy.threshold,
            "polarity": self.policy.polarity.value,
            "pairs": dict(sorted(self.pairs.items())),
        }


def list_images(directory: Path) -> dict[str, Path]:
    """Map file stem -> path for every raster image in a directory."""
    out: dict[str, Path] = {}
    dupes = []
    for p in sorted(directory.iterdir()):
        if p.suffix.lower() in IMAGE_EXTENSIONS and p.is_file():
            if p.stem in out:
                dupes.append(p)
            out[p.stem] = p
    if dupes:
        raise ManifestMismatchError([f"ambiguous stem: {p}" for p in dupes])
    return out


def pair_images(job: EvalJob) -> list[tuple[str, str, Path, Path]]:
    """Resolve (method, stem, pred_path, gt_path) tasks; fail on any leftover."""
    gt_files = list_images(job.gt_dir)
    if not gt_files:
        raise ManifestMismatchError([f"no images in ground-truth dir {job.gt_dir}"])
    tasks = []
    unmatched = []
    for method in job.pred_dirs:
        pred_files = list_images(job.pred_dirs[method])
        if not pred_files:
            unmatched.append(f"no images in prediction dir {job.pred_dirs[method]}")
            continue
        matched_gt = set()
        for stem, pred_path in sorted(pred_files.items()):
            gt_stem = job.pairs.get(stem, stem)
            if gt_stem in gt_files:
                tasks.append((method, stem, pred_path, gt_files[gt_stem]))
                matched_gt.add(gt_stem)
            else:
                unmatched.append(f"{method}: prediction {pred_path.name} has no ground truth")
        for stem in sorted(set(gt_files) - matched_gt):
            unmatched.append(f"{method}: ground truth {gt_files[stem].name} has no prediction")
    if unmatched:
        raise ManifestMismatchError(unmatched)
    return tasks


def _evaluate_task(args):
    """Worker entry: score one (method, image) pair.  Must stay picklable."""
    method, stem, pred_path, gt_path, metric_names, threshold, polarity_value = args
    from .mask_io import Polarity  # local import keeps the pickle payload primitive

    policy = BinarizationPolicy(threshold=threshold, polarity=Polarity(polarity_value))
    descriptors = [parse_metric(name) for name in metric_names]
    report = evaluate_pair(load_mask(pred_path, policy), load_mask(gt_path, policy), descriptors)
    rows = []
    for desc in descriptors:
        mv = report[desc.name]
        rows.append((desc.name, mv.value, mv.error, mv.degenerate))
    return method, stem, rows


def run_job(job: EvalJob) -> tuple[dict, bool]:
    """Execute the job, write reports to job.out_dir, return (report, any_failed)."""
    tasks = pair_images(job)
    tasks.sort(key=lambda t: (t[0], t[1]))
    metric_names = [d.name for d in job.metrics]
    payloads = [
        (method, stem, pred, gt, metric_names, job.policy.threshold, job.policy.polarity.value)
        for method, stem, pred, gt in tasks
    ]
    if job.jobs > 1:
        # spawn, not fork: the numba kernels run OpenMP threads and forking a
        # process with live OpenMP state is undefined behavior
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=job.jobs, mp_context=ctx) as pool:
            results = list(pool.map(_evaluate_task, payloads))
    else:
        results = [_evaluate_task(p) for p in payloads]

    per_image: dict[str, dict[str, dict]] = {}
    for method, stem, rows in results:
        cell = per_image.setdefault(method, {}).setdefault(stem, {})
        for name, value, error, degenerate in rows:
            cell[name] = {"value": value, "error": error, "degenerate": degenerate}

    aggregate: dict[str, dict[str, dict]] = {}
    failures = []
    for method in job.pred_dirs:
        aggregate[method] = {}
        images = per_image.get(method, {})
        for name in metric_names:
            values = []
            failed = 0
            for stem in sorted(images):
                entry = images[stem][name]
                if entry["error"] is None:
                    values.append(entry["value"])
                else:
                    failed += 1
                    failures.append(
                        {"method": method, "image": stem, "metric": name, "error": entry["error"]}
                    )
            aggregate[method][name] = {
                "mean": (sum(values) / len(values)) if values else None,
                "count": len(values),
                "failures": failed,
            }

    report = {
        "config": job.config_dict(),
        "per_image": per_image,
        "aggregate": aggregate,
        "failures": failures,
    }
    write_reports(job, report)
    return report, bool(failures)


def _header_lines(config: dict) -> list[str]:
    return [f"# {key}={json.dumps(value, sort_keys=True)}" for key, value in config.items()]


def _arrow(desc: MetricDescriptor) -> str:
    return "^" if desc.orientation is Orientation.HIGHER_IS_BETTER else "v"


def write_reports(job: EvalJob, report: dict) -> None:
    """Write per_image.csv, aggregate.csv and report.json under job.out_dir."""
    out = job.out_dir
    out.mkdir(parents=True, exist_ok=True)
    header = _header_lines(report["config"])

    lines = list(header)
    lines.append("method,image,metric,value,error,degenerate")
    for method in job.pred_dirs:
        images = report["per_image"].get(method, {})
        for stem in sorted(images):
            for name in report["config"]["metrics"]:
                entry = images[stem][name]
                value = "" if entry["value"] is None else repr(entry["value"])
                error = (entry["error"] or "").replace('"', "'")
                degenerate = "1" if entry["degenerate"] else ""
                lines.append(f'{method},{stem},{name},{value},"{error}",{degenerate}')
    (out / "per_image.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = list(header)
    arrow_names = [f"{d.name}{_arrow(d)}" for d in job.metrics]
    lines.append("method," + ",".join(arrow_names))
    for method in job.pred_dirs:
        cells = []
        for name in report["config"]["metrics"]:
            agg = report["aggregate"][method][name]
            cells.append("" if agg["mean"] is None else repr(agg["mean"]))
        lines.append(f"{method}," + ",".join(cells))
    (out / "aggregate.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    (out / "report.json").write_text(
        json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
