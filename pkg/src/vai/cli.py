"""Command-line entry point: manifest ingestion, configuration, parallel
scoring, and report/eval dispatch.

Subcommands: score, rank, eval, lbp. Progress and warnings go to stderr;
stdout carries only machine-readable tables. Exit codes: 0 success,
1 partial success (some rows skipped), 2 fatal.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import multiprocessing
import os
import sys
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .detector_eval import eval_table, load_predictions
from .errors import DegenerateScalingError, ManifestError, VaiError
from .index import Cohort, VaiScore, cohort_raw, pool_normalize, scale_scores
from .metrics import MetricConfig, compute_all
from .raster import encode_png, load_image, to_grayscale
from .report import (
    ImageRow,
    ScoreReport,
    accuracy_matrix_csv,
    emit_csv,
    emit_json,
    eval_csv,
    fmt2,
    fmt_full,
    lbp_visualization,
    metrics_csv,
    scatter_matrix_svg,
)

log = logging.getLogger("vai")

_IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")

# Fields that affect metric/score values; echoed into every score report.
# Worker count and output directory deliberately stay out so reports are
# byte-identical at any parallelism.
_SNAPSHOT_FIELDS = (
    "resize",
    "hsv_bins",
    "lbp_bins",
    "blur_sigma",
    "canny_sigma",
    "canny_low",
    "canny_high",
    "weights",
)

_DEFAULTS = {
    "resize": 512,
    "hsv_bins": 8,
    "lbp_bins": 256,
    "blur_sigma": 1.0,
    "canny_sigma": 1.4,
    "canny_low": 0.1,
    "canny_high": 0.3,
    "weights": (1.0,) * 7,
    "workers": None,  # None -> VAI_WORKERS or cpu count
    "out": "vai-out",
}


@dataclass(frozen=True)
class RunConfig:
    resize: int
    hsv_bins: int
    lbp_bins: int
    blur_sigma: float
    canny_sigma: float
    canny_low: float
    canny_high: float
    weights: tuple
    workers: int
    out: str

    def metric_config(self) -> MetricConfig:
        return MetricConfig(
            resize_target=self.resize,
            hsv_bins=self.hsv_bins,
            lbp_bins=self.lbp_bins,
            blur_sigma=self.blur_sigma,
            canny_sigma=self.canny_sigma,
            canny_low=self.canny_low,
            canny_high=self.canny_high,
        )

    def snapshot(self) -> dict:
        d = {name: getattr(self, name) for name in _SNAPSHOT_FIELDS}
        d["weights"] = list(self.weights)
        return d


def _parse_weights(text: str) -> tuple:
    parts = [p.strip() for p in text.split(",")]
    if len(parts) != 7:
        raise ValueError(f"need 7 comma-separated weights, got {len(parts)}")
    return tuple(float(p) for p in parts)


def build_config(args) -> RunConfig:
    """Merge precedence: defaults < config file < explicit flags."""
    merged = dict(_DEFAULTS)
    if getattr(args, "config", None):
        with open(args.config, encoding="utf-8") as fh:
            loaded = json.load(fh)
        unknown = sorted(set(loaded) - set(_DEFAULTS))
        if unknown:
            raise VaiError(f"unknown config file key(s): {unknown}")
        if "weights" in loaded:
            loaded["weights"] = tuple(float(w) for w in loaded["weights"])
        merged.update(loaded)
    for name in _DEFAULTS:
        flag = getattr(args, name, None)
        if flag is not None:
            merged[name] = flag
    if isinstance(merged["weights"], str):
        merged["weights"] = _parse_weights(merged["weights"])

    workers = merged["workers"]
    if workers is None:
        workers = int(os.environ.get("VAI_WORKERS", 0)) or os.cpu_count() or 1
    workers = max(1, int(workers))

    if len(merged["weights"]) != 7:
        raise VaiError(f"need 7 metric weights, got {len(merged['weights'])}")
    return RunConfig(
        resize=int(merged["resize"]),
        hsv_bins=int(merged["hsv_bins"]),
        lbp_bins=int(merged["lbp_bins"]),
        blur_sigma=float(merged["blur_sigma"]),
        canny_sigma=float(merged["canny_sigma"]),
        canny_low=float(merged["canny_low"]),
        canny_high=float(merged["canny_high"]),
        weights=tuple(float(w) for w in merged["weights"]),
        workers=workers,
        out=str(merged["out"]),
    )


@dataclass(frozen=True)
class ManifestRow:
    path: str
    cohort: str
    label: str | None  # real | fake | None


def parse_manifest(stream) -> list:
    """CSV manifest `path,cohort[,label]`; label is real/fake when present."""
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise ManifestError("empty manifest")
    for col in ("path", "cohort"):
        if col not in reader.fieldnames:
            raise ManifestError(f"manifest header missing column {col!r}")
    rows = []
    for row in reader:
        n = reader.line_num
        path = (row["path"] or "").strip()
        cohort = (row["cohort"] or "").strip()
        if not path:
            raise ManifestError(f"manifest line {n}: empty path")
        if not cohort:
            raise ManifestError(f"manifest line {n}: empty cohort")
        label = (row.get("label") or "").strip() or None
        if label is not None and label not in ("real", "fake"):
            raise ManifestError(f"manifest line {n}: label must be real|fake, got {label!r}")
        rows.append(ManifestRow(path=path, cohort=cohort, label=label))
    return rows


def _dir_rows(name: str, directory: str, label: str | None) -> list:
    d = Path(directory)
    if not d.is_dir():
        raise VaiError(f"cohort {name!r}: {directory} is not a directory")
    rows = []
    for p in sorted(d.iterdir()):
        if p.suffix.lower() in _IMAGE_SUFFIXES and p.is_file():
            rows.append(ManifestRow(path=str(p), cohort=name, label=label))
    return rows


def load_manifest_rows(args) -> list:
    if args.manifest:
        with open(args.manifest, newline="", encoding="utf-8") as fh:
            return parse_manifest(fh)
    if not args.cohort and not args.real:
        raise VaiError("need --manifest or at least one --cohort name=dir")
    rows = []
    real_dir = Path(args.real).resolve() if args.real else None
    real_covered = False
    for spec_item in args.cohort or []:
        name, sep, directory = spec_item.partition("=")
        if not sep or not name or not directory:
            raise VaiError(f"--cohort expects name=dir, got {spec_item!r}")
        is_real = real_dir is not None and Path(directory).resolve() == real_dir
        real_covered = real_covered or is_real
        rows.extend(_dir_rows(name, directory, "real" if is_real else "fake"))
    if real_dir is not None and not real_covered:
        rows.extend(_dir_rows("real", str(real_dir), "real"))
    return rows


def _metric_worker(task):
    idx, path, cfg_kwargs = task
    try:
        vector = compute_all(load_image(path), MetricConfig(**cfg_kwargs))
        return idx, vector, None
    except Exception as exc:
        return idx, None, f"{type(exc).__name__}: {exc}"


def _compute_vectors(rows, cfg: RunConfig):
    """Metric stage. Returns ({row index: MetricVector}, [(row, reason)])."""
    mc = cfg.metric_config()
    kwargs = {
        "resize_target": mc.resize_target,
        "hsv_bins": mc.hsv_bins,
        "lbp_bins": mc.lbp_bins,
        "blur_sigma": mc.blur_sigma,
        "canny_sigma": mc.canny_sigma,
        "canny_low": mc.canny_low,
        "canny_high": mc.canny_high,
    }
    tasks = [(i, row.path, kwargs) for i, row in enumerate(rows)]
    results = {}
    skipped = []
    if cfg.workers <= 1 or len(tasks) <= 1:
        outcomes = map(_metric_worker, tasks)
    else:
        pool = multiprocessing.Pool(processes=cfg.workers)
        outcomes = pool.imap_unordered(_metric_worker, tasks, chunksize=1)
    done = 0
    for idx, vector, err in outcomes:
        done += 1
        if err is None:
            results[idx] = vector
        else:
            skipped.append((rows[idx], err))
            log.warning("skipped %s: %s", rows[idx].path, err)
        if done % 50 == 0:
            log.info("processed %d/%d images", done, len(tasks))
    if cfg.workers > 1 and len(tasks) > 1:
        pool.close()
        pool.join()
    return results, skipped


def _timestamp(args, rows) -> str:
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    if epoch is not None:
        ts = int(epoch)
    elif getattr(args, "manifest", None):
        ts = int(os.stat(args.manifest).st_mtime)
    elif getattr(args, "predictions", None):
        ts = int(os.stat(args.predictions).st_mtime)
    else:
        ts = max(
            (int(os.stat(r.path).st_mtime) for r in rows if os.path.exists(r.path)),
            default=0,
        )
    return datetime.fromtimestamp(ts, tz=timezone.utc).isoformat()


def _unscaled_scores(raws: dict) -> list:
    """Fallback rows when min-max scaling is degenerate: raws only."""
    values = list(raws.values())
    out = []
    for name in sorted(raws, key=lambda n: (-raws[n], n)):
        r = raws[name]
        out.append(
            VaiScore(
                cohort=name,
                raw=r,
                scaled=None,
                rank=1 + sum(1 for v in values if v > r),
                tied=values.count(r) > 1,
            )
        )
    return out


def _score_pipeline(args):
    """Shared by score/rank. Returns (report, skipped, cfg) or exits."""
    cfg = build_config(args)
    rows = load_manifest_rows(args)
    if not rows:
        raise VaiError("manifest contains no rows")

    missing = [r for r in rows if not os.path.isfile(r.path)]
    present = [r for r in rows if os.path.isfile(r.path)]
    skipped = [(r, "file not found") for r in missing]
    for r in missing:
        log.warning("skipped %s: file not found", r.path)

    seen = set()
    unique_rows = []
    for r in present:
        key = (r.cohort, r.path)
        if key in seen:
            skipped.append((r, "duplicate image id within cohort"))
            log.warning("skipped %s: duplicate image id in cohort %s", r.path, r.cohort)
            continue
        seen.add(key)
        unique_rows.append(r)

    vectors, compute_skips = _compute_vectors(unique_rows, cfg)
    skipped.extend(compute_skips)
    if not vectors:
        raise VaiError("no image could be scored")

    cohort_order = []
    members: dict = {}
    image_rows = []
    for i, row in enumerate(unique_rows):
        if i not in vectors:
            continue
        if row.cohort not in members:
            members[row.cohort] = []
            cohort_order.append(row.cohort)
        members[row.cohort].append((row.path, vectors[i]))
        image_rows.append(
            ImageRow(image_id=row.path, cohort=row.cohort, metrics=vectors[i])
        )

    cohorts = [Cohort(name=n, members=tuple(members[n])) for n in cohort_order]
    normalized, stats = pool_normalize(cohorts, cfg.lbp_bins)
    raws = {c.name: cohort_raw(c, stats, cfg.weights) for c in normalized}
    try:
        scores = scale_scores(raws)
    except DegenerateScalingError as exc:
        log.warning("scaling degenerate (%s); reporting unscaled raw scores", exc)
        scores = _unscaled_scores(raws)

    report = ScoreReport(
        config=cfg.snapshot(),
        images=tuple(image_rows),
        scores=tuple(scores),
        generated_at=_timestamp(args, unique_rows),
        version=__version__,
    )
    return report, skipped, cfg


def _write_score_artifacts(report: ScoreReport, cfg: RunConfig):
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    (out / "scores.json").write_bytes(emit_json(report))
    (out / "scores.csv").write_bytes(emit_csv(report))
    (out / "metrics.csv").write_bytes(metrics_csv(report))
    points = [row.metrics.as_tuple() for row in report.images]
    (out / "scatter.svg").write_bytes(scatter_matrix_svg(points))
    log.info("wrote %s", ", ".join(
        str(out / n) for n in ("scores.json", "scores.csv", "metrics.csv", "scatter.svg")
    ))


def cmd_score(args) -> int:
    report, skipped, cfg = _score_pipeline(args)
    _write_score_artifacts(report, cfg)
    log.info("scored %d images, skipped %d", len(report.images), len(skipped))
    return 1 if skipped else 0


def cmd_rank(args) -> int:
    report, skipped, cfg = _score_pipeline(args)
    _write_score_artifacts(report, cfg)
    ties = [s.cohort for s in report.scores if s.tied]
    if ties:
        log.warning("tied raw scores share a rank: %s", ", ".join(sorted(ties)))
    print("rank\tcohort\tscaled\traw\ttied")
    for s in report.scores:
        scaled = "n/a" if s.scaled is None else fmt2(s.scaled)
        tied = "tied" if s.tied else "-"
        print(f"{s.rank}\t{s.cohort}\t{scaled}\t{fmt_full(s.raw)}\t{tied}")
    log.info("scored %d images, skipped %d", len(report.images), len(skipped))
    return 1 if skipped else 0


def cmd_eval(args) -> int:
    records = load_predictions(args.predictions)
    table = eval_table(records, thresholds=args.threshold)
    out = Path(args.out if args.out is not None else _DEFAULTS["out"])
    out.mkdir(parents=True, exist_ok=True)
    (out / "eval.csv").write_bytes(eval_csv(table))
    (out / "accuracy_matrix.csv").write_bytes(accuracy_matrix_csv(table))
    print("detector\tcohort\tacc\trecall\tprecision")
    for d in table.detectors:
        for c in table.cohorts:
            cell = table.cells[(d, c)]
            print(
                f"{d}\t{c}\t{fmt2(cell.scores.acc)}"
                f"\t{fmt2(cell.scores.recall)}\t{fmt2(cell.scores.precision)}"
            )
    log.info("wrote %s and %s", out / "eval.csv", out / "accuracy_matrix.csv")
    return 0


def cmd_lbp(args) -> int:
    img = load_image(args.image)
    viz = lbp_visualization(to_grayscale(img))
    src = Path(args.image)
    out_path = Path(args.out_image) if args.out_image else src.with_name(
        src.stem + "_lbp.png"
    )
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_path.write_bytes(encode_png(viz))
    log.info("wrote %s (%dx%d)", out_path, viz.width, viz.height)
    return 0


def _add_input_flags(p):
    p.add_argument("--manifest", help="CSV manifest with header path,cohort[,label]")
    p.add_argument(
        "--cohort",
        action="append",
        metavar="NAME=DIR",
        help="add a cohort from a directory of images (repeatable)",
    )
    p.add_argument(
        "--real",
        metavar="DIR",
        help="directory of real images; its rows are labeled real",
    )


def _add_config_flags(p):
    p.add_argument("--config", help="JSON config file (defaults < file < flags)")
    p.add_argument("--out", help="output directory (default: vai-out)")
    p.add_argument(
        "--workers",
        type=int,
        help="worker process count (default: $VAI_WORKERS or logical cores)",
    )
    p.add_argument("--resize", type=int, help="analysis resolution: longest side (default: 512)")
    p.add_argument("--hsv-bins", dest="hsv_bins", type=int, help="HSV bins per axis (default: 8)")
    p.add_argument("--lbp-bins", dest="lbp_bins", type=int, help="LBP histogram bins (default: 256)")
    p.add_argument("--blur-sigma", dest="blur_sigma", type=float, help="sharpness blur sigma (default: 1.0)")
    p.add_argument("--canny-sigma", dest="canny_sigma", type=float, help="Canny smoothing sigma (default: 1.4)")
    p.add_argument("--canny-low", dest="canny_low", type=float, help="Canny low threshold fraction (default: 0.1)")
    p.add_argument("--canny-high", dest="canny_high", type=float, help="Canny high threshold fraction (default: 0.3)")
    p.add_argument(
        "--weights",
        help="7 comma-separated V_AI metric weights (default: 1,1,1,1,1,1,1)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="vai",
        description="Visual AI Index: score image cohorts on seven low-level "
        "visual metrics, rank generators, and evaluate detectors.",
    )
    parser.add_argument("--version", action="version", version=f"vai {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    p_score = sub.add_parser("score", help="compute metrics and V_AI scores")
    _add_input_flags(p_score)
    _add_config_flags(p_score)
    p_score.set_defaults(func=cmd_score)

    p_rank = sub.add_parser("rank", help="score and print the cohort ranking")
    _add_input_flags(p_rank)
    _add_config_flags(p_rank)
    p_rank.set_defaults(func=cmd_rank)

    p_eval = sub.add_parser("eval", help="evaluate detector predictions")
    p_eval.add_argument("predictions", help="prediction CSV (image_id,truth,score,detector,cohort)")
    p_eval.add_argument(
        "--threshold",
        type=float,
        default=0.5,
        help="decision threshold: predicted fake iff score >= t (default: 0.5)",
    )
    _add_config_flags(p_eval)
    p_eval.set_defaults(func=cmd_eval)

    p_lbp = sub.add_parser("lbp", help="write the LBP visualization of an image")
    p_lbp.add_argument("image", help="input image (PNG or JPEG)")
    p_lbp.add_argument("--out-image", dest="out_image", help="output PNG path")
    _add_config_flags(p_lbp)
    p_lbp.set_defaults(func=cmd_lbp)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(message)s",
    )
    try:
        return args.func(args)
    except VaiError as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("%s", exc)
        return 2


def entrypoint():
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
