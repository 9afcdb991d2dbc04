"""Deterministic report emission: JSON/CSV score artifacts, the eval tables,
the pairwise scatter-matrix SVG, and the LBP visualization raster.

Every emitter is a pure function of its inputs: sorted JSON keys, fixed
decimal formatting (percent-like values rounded half-up to 2 decimals at
emission only), LF line endings, trailing newline. Charts are plain SVG
built element by element, so reports reproduce byte-identically in CI.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from xml.etree import ElementTree as ET

import numpy as np

from .detector_eval import EvalTable
from .errors import EmptyInputError
from .metrics import METRIC_ABBREV, METRIC_FIELDS, MetricVector
from .index import VaiScore
from .raster import PixelBuffer
from .texture import lbp_code_map


def round2(x: float) -> float:
    """Round half-up to 2 decimals (5 at the third decimal rounds away)."""
    return float(Decimal(repr(float(x))).quantize(Decimal("0.01"), ROUND_HALF_UP))


def fmt2(x) -> str:
    """Two-decimal cell text; None renders as n/a."""
    if x is None:
        return "n/a"
    return f"{round2(x):.2f}"


def fmt_full(x: float) -> str:
    """Shortest representation that round-trips the double exactly."""
    return repr(float(x))


@dataclass(frozen=True)
class ImageRow:
    image_id: str
    cohort: str
    metrics: MetricVector


@dataclass(frozen=True)
class ScoreReport:
    config: dict
    images: tuple  # of ImageRow
    scores: tuple  # of VaiScore
    generated_at: str
    version: str

    def __post_init__(self):
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "scores", tuple(self.scores))
        for s in self.scores:
            if s.scaled is not None and not (0.0 <= s.scaled <= 100.0):
                raise ValueError(f"scaled score outside [0,100]: {s.scaled}")


def emit_json(report: ScoreReport) -> bytes:
    doc = {
        "version": report.version,
        "generated_at": report.generated_at,
        "config": report.config,
        "images": [
            {
                "image_id": row.image_id,
                "cohort": row.cohort,
                "metrics": row.metrics.as_dict(),
            }
            for row in report.images
        ],
        "scores": [
            {
                "cohort": s.cohort,
                "raw": s.raw,
                "scaled": None if s.scaled is None else round2(s.scaled),
                "rank": s.rank,
                "tied": s.tied,
            }
            for s in report.scores
        ],
    }
    return (json.dumps(doc, sort_keys=True, indent=2) + "\n").encode("utf-8")


def report_from_dict(doc: dict) -> ScoreReport:
    """Inverse of emit_json's document shape (for round-trip checks)."""
    images = tuple(
        ImageRow(
            image_id=d["image_id"],
            cohort=d["cohort"],
            metrics=MetricVector(**d["metrics"]),
        )
        for d in doc["images"]
    )
    scores = tuple(
        VaiScore(
            cohort=d["cohort"],
            raw=d["raw"],
            scaled=d["scaled"],
            rank=d["rank"],
            tied=d["tied"],
        )
        for d in doc["scores"]
    )
    return ScoreReport(
        config=doc["config"],
        images=images,
        scores=scores,
        generated_at=doc["generated_at"],
        version=doc["version"],
    )


def _csv_bytes(rows) -> bytes:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue().encode("utf-8")


def emit_csv(report: ScoreReport) -> bytes:
    """Per-cohort score table (the Table-3 shape)."""
    counts: dict = {}
    for row in report.images:
        counts[row.cohort] = counts.get(row.cohort, 0) + 1
    rows = [["cohort", "n_images", "raw", "scaled", "rank", "tied"]]
    for s in report.scores:
        rows.append(
            [
                s.cohort,
                counts.get(s.cohort, 0),
                fmt_full(s.raw),
                fmt2(s.scaled),
                s.rank,
                "true" if s.tied else "false",
            ]
        )
    return _csv_bytes(rows)


def metrics_csv(report: ScoreReport) -> bytes:
    """Per-image metric table at full precision."""
    rows = [["image_id", "cohort", *METRIC_ABBREV]]
    for row in report.images:
        rows.append(
            [row.image_id, row.cohort]
            + [fmt_full(v) for v in row.metrics.as_tuple()]
        )
    return _csv_bytes(rows)


EVAL_COLUMNS = (
    "detector",
    "cohort",
    "threshold",
    "n_real",
    "n_fake",
    "tp",
    "fp",
    "tn",
    "fn",
    "acc",
    "recall",
    "precision",
)


def eval_csv(table: EvalTable) -> bytes:
    rows = [list(EVAL_COLUMNS)]
    for d in table.detectors:
        for c in table.cohorts:
            cell = table.cells[(d, c)]
            m = cell.matrix
            rows.append(
                [
                    d,
                    c,
                    fmt_full(cell.threshold),
                    cell.n_real,
                    cell.n_fake,
                    m.tp,
                    m.fp,
                    m.tn,
                    m.fn,
                    fmt2(cell.scores.acc),
                    fmt2(cell.scores.recall),
                    fmt2(cell.scores.precision),
                ]
            )
    return _csv_bytes(rows)


def parse_eval_csv(data: bytes) -> dict:
    """Read eval_csv output back into {(detector, cohort): {col: value}}."""
    text = data.decode("utf-8")
    reader = csv.DictReader(io.StringIO(text))
    out = {}
    for row in reader:
        key = (row["detector"], row["cohort"])
        parsed = {}
        for col in ("acc", "recall", "precision"):
            parsed[col] = None if row[col] == "n/a" else float(row[col])
        for col in ("tp", "fp", "tn", "fn", "n_real", "n_fake"):
            parsed[col] = int(row[col])
        parsed["threshold"] = float(row["threshold"])
        out[key] = parsed
    return out


def accuracy_matrix_csv(table: EvalTable) -> bytes:
    """Detector x cohort accuracy grid (heat-map data)."""
    rows = [["detector", *table.cohorts]]
    for d, accs in zip(table.detectors, table.accuracy_matrix()):
        rows.append([d] + [fmt2(a) for a in accs])
    return _csv_bytes(rows)


# Scatter matrix layout constants (pixels).
_CELL = 110
_GAP = 8
_MARGIN = 46
_QUANTILE_COLORS = ("#c6dbef", "#6baed6", "#2171b5", "#08306b")


def _panel_range(lo: float, hi: float) -> tuple:
    if hi > lo:
        pad = 0.05 * (hi - lo)
        return lo - pad, hi + pad
    return lo - 0.5, hi + 0.5


def scatter_matrix_svg(points, labels=METRIC_ABBREV) -> bytes:
    """7x7 pairwise panel grid: histograms on the diagonal, scatters off it.

    Points are per-image metric 7-vectors; dots are colored by the image's
    object-coherence quartile. Every panel carries its axis range in
    data-{x,y}-{min,max} attributes (data min/max with 5% padding).
    """
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        raise EmptyInputError("scatter matrix needs at least one point")
    if pts.ndim != 2 or pts.shape[1] != len(labels):
        raise ValueError(f"expected (n, {len(labels)}) points, got {pts.shape}")
    n = pts.shape[0]

    k = len(labels)
    oc = pts[:, METRIC_ABBREV.index("OC")]
    order = np.argsort(oc, kind="stable")
    rank = np.empty(n, dtype=np.int64)
    rank[order] = np.arange(n)
    bucket = (rank * 4) // n  # 0..3 quartile index

    size = _MARGIN + k * (_CELL + _GAP) + _MARGIN
    svg = ET.Element(
        "svg",
        {
            "xmlns": "http://www.w3.org/2000/svg",
            "width": str(size),
            "height": str(size),
            "viewBox": f"0 0 {size} {size}",
        },
    )
    ET.SubElement(
        svg, "rect", {"width": str(size), "height": str(size), "fill": "white"}
    )

    data_lo = pts.min(axis=0)
    data_hi = pts.max(axis=0)

    for i in range(k):  # panel row: metric i on y
        for j in range(k):  # panel col: metric j on x
            x0 = _MARGIN + j * (_CELL + _GAP)
            y0 = _MARGIN + i * (_CELL + _GAP)
            xlo, xhi = _panel_range(float(data_lo[j]), float(data_hi[j]))
            ylo, yhi = _panel_range(float(data_lo[i]), float(data_hi[i]))
            g = ET.SubElement(
                svg,
                "g",
                {
                    "data-row": labels[i],
                    "data-col": labels[j],
                    "data-x-min": repr(xlo),
                    "data-x-max": repr(xhi),
                    "data-y-min": repr(ylo),
                    "data-y-max": repr(yhi),
                },
            )
            ET.SubElement(
                g,
                "rect",
                {
                    "x": str(x0),
                    "y": str(y0),
                    "width": str(_CELL),
                    "height": str(_CELL),
                    "fill": "none",
                    "stroke": "#999999",
                    "stroke-width": "1",
                },
            )
            if i == j:
                _histogram_panel(g, pts[:, j], x0, y0, xlo, xhi)
                ET.SubElement(
                    g,
                    "text",
                    {
                        "x": str(x0 + 5),
                        "y": str(y0 + 14),
                        "font-family": "sans-serif",
                        "font-size": "11",
                        "fill": "#333333",
                    },
                ).text = labels[i]
            else:
                _scatter_panel(g, pts[:, j], pts[:, i], bucket, x0, y0,
                               xlo, xhi, ylo, yhi)

    # Axis labels along top and left edges.
    for j in range(k):
        cx = _MARGIN + j * (_CELL + _GAP) + _CELL // 2
        ET.SubElement(
            svg,
            "text",
            {
                "x": str(cx),
                "y": str(_MARGIN - 10),
                "text-anchor": "middle",
                "font-family": "sans-serif",
                "font-size": "12",
            },
        ).text = labels[j]
        cy = _MARGIN + j * (_CELL + _GAP) + _CELL // 2
        ET.SubElement(
            svg,
            "text",
            {
                "x": str(_MARGIN - 10),
                "y": str(cy + 4),
                "text-anchor": "end",
                "font-family": "sans-serif",
                "font-size": "12",
            },
        ).text = labels[j]

    return ET.tostring(svg, encoding="utf-8", xml_declaration=True) + b"\n"


def _histogram_panel(g, col, x0, y0, xlo, xhi, bins: int = 10):
    counts, edges = np.histogram(col, bins=bins, range=(xlo, xhi))
    peak = counts.max()
    if peak == 0:
        return
    span = xhi - xlo
    for b in range(bins):
        if counts[b] == 0:
            continue
        bx = x0 + (edges[b] - xlo) / span * _CELL
        bw = (edges[b + 1] - edges[b]) / span * _CELL
        bh = counts[b] / peak * (_CELL - 18)
        ET.SubElement(
            g,
            "rect",
            {
                "x": f"{bx:.2f}",
                "y": f"{y0 + _CELL - bh:.2f}",
                "width": f"{bw:.2f}",
                "height": f"{bh:.2f}",
                "fill": "#6baed6",
            },
        )


def _scatter_panel(g, xs, ys, bucket, x0, y0, xlo, xhi, ylo, yhi):
    xspan = xhi - xlo
    yspan = yhi - ylo
    for p in range(xs.shape[0]):
        px = x0 + (xs[p] - xlo) / xspan * _CELL
        py = y0 + _CELL - (ys[p] - ylo) / yspan * _CELL
        ET.SubElement(
            g,
            "circle",
            {
                "cx": f"{px:.2f}",
                "cy": f"{py:.2f}",
                "r": "2",
                "fill": _QUANTILE_COLORS[int(bucket[p])],
            },
        )


def lbp_visualization(img) -> PixelBuffer:
    """LBP code map rendered as 8-bit grayscale (code value = pixel value)."""
    codes = lbp_code_map(img).codes.astype(np.uint8)
    return PixelBuffer(np.stack([codes, codes, codes], axis=-1))
