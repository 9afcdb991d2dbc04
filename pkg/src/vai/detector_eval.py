"""Detector accuracy/recall/precision over prediction manifests.

The positive class is "fake" (AI-generated). Each (detector, cohort) cell
is evaluated on that cohort's fake records combined with the detector's
real records, which are shared across the detector's cells. Percentages
stay at full precision here; rounding happens only at emission.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

from .errors import CoverageError, EmptyInputError, ManifestError

TRUTH_VALUES = ("real", "fake")

PREDICTION_COLUMNS = ("image_id", "truth", "score", "detector", "cohort")


@dataclass(frozen=True)
class PredictionRecord:
    image_id: str
    truth: str  # "real" | "fake"
    detector: str
    cohort: str
    score: float | None = None  # soft score in [0,1]
    label: str | None = None  # hard prediction, "real" | "fake"
    line: int | None = None  # manifest line, for error messages

    def __post_init__(self):
        if self.truth not in TRUTH_VALUES:
            raise ValueError(f"truth must be real|fake, got {self.truth!r}")
        if self.label is not None and self.label not in TRUTH_VALUES:
            raise ValueError(f"label must be real|fake, got {self.label!r}")
        if self.score is not None and not (0.0 <= self.score <= 1.0):
            raise ValueError(f"score must lie in [0,1], got {self.score!r}")


@dataclass(frozen=True)
class ConfusionMatrix:
    """Counts with fake as the positive class."""

    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self):
        for name in ("tp", "fp", "tn", "fn"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class EvalMetrics:
    """Percentages; recall/precision are None when undefined (never 0)."""

    acc: float
    recall: float | None
    precision: float | None


def parse_predictions(stream) -> list:
    """Parse a prediction CSV (header image_id,truth,score,detector,cohort).

    `stream` is any iterable of text lines. The score column holds either a
    soft score in [0,1] or a hard label real/fake. Malformed rows raise
    ManifestError with the offending line number.
    """
    reader = csv.DictReader(stream)
    if reader.fieldnames is None:
        raise ManifestError("empty predictions file")
    missing = [c for c in PREDICTION_COLUMNS if c not in reader.fieldnames]
    if missing:
        raise ManifestError(f"predictions header missing column(s): {missing}")

    records = []
    for row in reader:
        n = reader.line_num
        truth = (row["truth"] or "").strip()
        if truth not in TRUTH_VALUES:
            raise ManifestError(f"line {n}: truth must be real|fake, got {truth!r}")
        detector = (row["detector"] or "").strip()
        cohort = (row["cohort"] or "").strip()
        if not detector or not cohort:
            raise ManifestError(f"line {n}: empty detector or cohort")
        image_id = (row["image_id"] or "").strip()
        if not image_id:
            raise ManifestError(f"line {n}: empty image_id")

        cell = (row["score"] or "").strip()
        score = None
        label = None
        if cell in TRUTH_VALUES:
            label = cell
        elif cell:
            try:
                score = float(cell)
            except ValueError:
                raise ManifestError(
                    f"line {n}: score must be a number in [0,1] or real|fake, "
                    f"got {cell!r}"
                ) from None
            if not (0.0 <= score <= 1.0):
                raise ManifestError(f"line {n}: score {score} outside [0,1]")
        else:
            raise ManifestError(f"line {n}: record has neither score nor label")

        records.append(
            PredictionRecord(
                image_id=image_id,
                truth=truth,
                detector=detector,
                cohort=cohort,
                score=score,
                label=label,
                line=n,
            )
        )
    return records


def load_predictions(path) -> list:
    with open(path, newline="", encoding="utf-8") as fh:
        return parse_predictions(fh)


def _predicted_fake(r: PredictionRecord, threshold: float) -> bool:
    if r.label is not None:
        return r.label == "fake"
    if r.score is None:
        where = f" (line {r.line})" if r.line else ""
        raise ManifestError(
            f"record {r.image_id!r}{where} has neither score nor label"
        )
    return r.score >= threshold


def confusion(records, threshold: float = 0.5) -> ConfusionMatrix:
    """Count tp/fp/tn/fn; predicted fake iff score >= threshold."""
    if not (0.0 <= threshold <= 1.0):
        raise ValueError(f"threshold must lie in [0,1], got {threshold}")
    tp = fp = tn = fn = 0
    for r in records:
        pred_fake = _predicted_fake(r, threshold)
        if r.truth == "fake":
            if pred_fake:
                tp += 1
            else:
                fn += 1
        else:
            if pred_fake:
                fp += 1
            else:
                tn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def metrics(cm: ConfusionMatrix) -> EvalMetrics:
    """acc = (tp+tn)/total, recall = tp/(tp+fn), precision = tp/(tp+fp)."""
    if cm.total == 0:
        raise EmptyInputError("confusion matrix has no records")
    acc = 100.0 * (cm.tp + cm.tn) / cm.total
    recall = 100.0 * cm.tp / (cm.tp + cm.fn) if cm.tp + cm.fn else None
    precision = 100.0 * cm.tp / (cm.tp + cm.fp) if cm.tp + cm.fp else None
    return EvalMetrics(acc=acc, recall=recall, precision=precision)


@dataclass(frozen=True)
class EvalCell:
    detector: str
    cohort: str
    threshold: float
    matrix: ConfusionMatrix
    scores: EvalMetrics
    n_real: int
    n_fake: int


@dataclass(frozen=True)
class EvalTable:
    detectors: tuple
    cohorts: tuple
    cells: dict  # (detector, cohort) -> EvalCell

    def cell(self, detector: str, cohort: str) -> EvalCell:
        return self.cells[(detector, cohort)]

    def accuracy_matrix(self) -> list:
        """Heat-map data: one row per detector, one acc column per cohort."""
        return [
            [self.cells[(d, c)].scores.acc for c in self.cohorts]
            for d in self.detectors
        ]


def eval_table(records, detectors=None, cohorts=None, thresholds=None) -> EvalTable:
    """Evaluate every (detector, cohort) cell of the records.

    Fake records select on (detector, cohort); real records are shared
    across a detector's cells. Missing cells raise CoverageError listing
    every gap rather than silently zero-filling. `thresholds` maps detector
    to its decision threshold (default 0.5 everywhere).
    """
    records = list(records)
    if detectors is None:
        detectors = sorted({r.detector for r in records})
    if cohorts is None:
        cohorts = sorted({r.cohort for r in records if r.truth == "fake"})
    if isinstance(thresholds, (int, float)):
        thresholds = {d: float(thresholds) for d in detectors}
    thresholds = dict(thresholds or {})
    if not detectors:
        raise EmptyInputError("no detectors to evaluate")
    if not cohorts:
        raise EmptyInputError("no cohorts to evaluate")

    fakes: dict = {}
    reals: dict = {}
    seen_fake = set()
    seen_real = set()
    for r in records:
        if r.truth == "fake":
            key = (r.detector, r.cohort, r.image_id)
            if key in seen_fake:
                raise ManifestError(
                    f"duplicate prediction for detector={r.detector!r} "
                    f"cohort={r.cohort!r} image_id={r.image_id!r}"
                )
            seen_fake.add(key)
            fakes.setdefault((r.detector, r.cohort), []).append(r)
        else:
            key = (r.detector, r.image_id)
            if key in seen_real:
                raise ManifestError(
                    f"duplicate real prediction for detector={r.detector!r} "
                    f"image_id={r.image_id!r}"
                )
            seen_real.add(key)
            reals.setdefault(r.detector, []).append(r)

    gaps = []
    for d in detectors:
        if d not in reals:
            gaps.append(f"detector {d!r}: no real records")
        for c in cohorts:
            if (d, c) not in fakes:
                gaps.append(f"detector {d!r} / cohort {c!r}: no fake records")
    if gaps:
        raise CoverageError("; ".join(gaps))

    cells = {}
    for d in detectors:
        thr = float(thresholds.get(d, 0.5))
        for c in cohorts:
            cell_records = fakes[(d, c)] + reals[d]
            cm = confusion(cell_records, thr)
            cells[(d, c)] = EvalCell(
                detector=d,
                cohort=c,
                threshold=thr,
                matrix=cm,
                scores=metrics(cm),
                n_real=len(reals[d]),
                n_fake=len(fakes[(d, c)]),
            )
    return EvalTable(detectors=tuple(detectors), cohorts=tuple(cohorts), cells=cells)
