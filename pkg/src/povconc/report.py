"""Assemble, format and write report bundles; render SVG line charts."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from typing import Iterable, Sequence
from xml.sax.saxutils import escape

from . import analysis, distribution, indices
from .analysis import ClassificationRow, ConvergenceReport, GroupMeans
from .config import Config
from .distribution import QuantileSummary, RateCurve
from .errors import DataError
from .indices import ScoreSet
from .ingest import CITY, METRO, NONCITY, Snapshot, TractRecord, build_snapshot, group_records

SCOPE_ORDER = {METRO: 0, CITY: 1, NONCITY: 2}
PARTS = ("scores", "curves", "summaries", "classifications", "group_means", "convergence", "buckets")


@dataclass
class ReportBundle:
    scores: list[ScoreSet] = field(default_factory=list)
    curves: list[RateCurve] = field(default_factory=list)
    summaries: list[QuantileSummary] = field(default_factory=list)
    classifications: list[ClassificationRow] = field(default_factory=list)
    group_means: list[GroupMeans] = field(default_factory=list)
    convergence: list[ConvergenceReport] = field(default_factory=list)
    buckets: list[tuple[str, str, int, int]] = field(default_factory=list)
    provenance: dict = field(default_factory=dict)

    def is_empty(self) -> bool:
        return not any(getattr(self, p) for p in PARTS)

    def to_dict(self) -> dict:
        return {
            "scores": [s.to_dict() for s in self.scores],
            "curves": [c.to_dict() for c in self.curves],
            "summaries": [s.to_dict() for s in self.summaries],
            "classifications": [c.to_dict() for c in self.classifications],
            "group_means": [g.to_dict() for g in self.group_means],
            "convergence": [c.to_dict() for c in self.convergence],
            "buckets": [{"msa": m, "tract_id": t, "year": y, "class": k} for m, t, y, k in self.buckets],
            "provenance": self.provenance,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ReportBundle":
        return cls(
            scores=[ScoreSet.from_dict(x) for x in d.get("scores", [])],
            curves=[RateCurve.from_dict(x) for x in d.get("curves", [])],
            summaries=[QuantileSummary.from_dict(x) for x in d.get("summaries", [])],
            classifications=[ClassificationRow.from_dict(x) for x in d.get("classifications", [])],
            group_means=[GroupMeans.from_dict(x) for x in d.get("group_means", [])],
            convergence=[ConvergenceReport.from_dict(x) for x in d.get("convergence", [])],
            buckets=[(b["msa"], b["tract_id"], int(b["year"]), int(b["class"])) for b in d.get("buckets", [])],
            provenance=d.get("provenance", {}),
        )


# --------------------------------------------------------------------------
# formatting


def round_half_away(value: Decimal, places: int) -> Decimal:
    return value.quantize(Decimal(1).scaleb(-places), rounding=ROUND_HALF_UP)


def percent_text(numerator: int, denominator: int, places: int = 1) -> str:
    pct = Decimal(numerator) * 100 / Decimal(denominator)
    return f"{round_half_away(pct, places)}%"


def format_classification_cell(row: ClassificationRow) -> str:
    """Tract count cell, e.g. ``27/216 (12.5%)``."""
    return f"{row.count_exceeding}/{row.count_total} ({percent_text(row.count_exceeding, row.count_total)})"


def format_population_cell(row: ClassificationRow) -> str:
    return f"{row.population_exceeding} ({percent_text(row.population_exceeding, row.metro_population, 2)})"


_CELL = re.compile(r"^\s*(\d+)\s*/\s*(\d+)\s*\(\s*(-?\d+(?:\.\d+)?)%\s*\)\s*$")


def parse_classification_cell(text: str) -> tuple[int, int, float]:
    m = _CELL.match(text)
    if not m:
        raise ValueError(f"not a classification cell: {text!r}")
    return int(m.group(1)), int(m.group(2)), float(m.group(3))


def suburban_table_text(rows: Sequence[ClassificationRow]) -> str:
    """Plain-text table: one line per (msa, percentile), one column per year."""
    years = sorted({r.year for r in rows})
    by_key: dict[tuple[str, int], dict[int, ClassificationRow]] = {}
    for r in rows:
        by_key.setdefault((r.msa, r.percentile_used), {})[r.year] = r
    header = ["Metro Area"] + [f"Tracts {y}" for y in years] + [f"Population {y}" for y in years]
    lines = [header]
    for (msa, pct), cells in sorted(by_key.items()):
        line = [f"{msa} ({pct}%)"]
        line += [format_classification_cell(cells[y]) if y in cells else "" for y in years]
        line += [format_population_cell(cells[y]) if y in cells else "" for y in years]
        lines.append(line)
    widths = [max(len(l[i]) for l in lines) for i in range(len(header))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(l, widths)).rstrip() for l in lines) + "\n"


# --------------------------------------------------------------------------
# assembly


def _snapshots(records: list[TractRecord], msa: str, year: int) -> dict[str, Snapshot]:
    out = {METRO: build_snapshot(records, msa, year, METRO)}
    for scope in (CITY, NONCITY):
        if any(r.scope == scope for r in records):
            out[scope] = build_snapshot(records, msa, year, scope)
    return out


def _reference_breaks(cfg: Config, snaps, msa: str, notes: list[str]) -> tuple[float, float, float] | None:
    ref = cfg.bucket_reference
    ref_msa = ref.get("msa") or msa
    years = sorted(y for (m, y) in snaps if m == ref_msa)
    if not years:
        notes.append(f"{msa}: bucket reference msa {ref_msa} not in data; no buckets")
        return None
    year = ref.get("year")
    if year not in years:
        notes.append(f"{msa}: bucket reference year {year} not in data; using {years[-1]}")
        year = years[-1]
    snap = snaps[(ref_msa, year)].get(ref.get("scope", CITY))
    if snap is None:
        notes.append(f"{msa}: no {ref.get('scope')} tracts in bucket reference {ref_msa} {year}; no buckets")
        return None
    return distribution.quartile_summary(snap, cfg.weighted_quantiles).breaks


def build_bundle(
    records: Iterable[TractRecord],
    cfg: Config | None = None,
    parts: Sequence[str] = PARTS,
    inputs: dict[str, str] | None = None,
) -> ReportBundle:
    """Run every requested analysis over all (msa, year) groups in ``records``."""
    cfg = cfg or Config()
    unknown = set(parts) - set(PARTS)
    if unknown:
        raise ValueError(f"unknown bundle parts: {sorted(unknown)}")
    notes: list[str] = []
    bundle = ReportBundle()

    snaps = {key: _snapshots(recs, *key) for key, recs in group_records(records).items()}
    if not snaps:
        raise DataError("no tract records")

    for (msa, year), by_scope in snaps.items():
        split = CITY in by_scope and NONCITY in by_scope
        if not split:
            notes.append(f"{msa} {year}: no city/noncity split; metro-only outputs")
        for scope in sorted(by_scope, key=SCOPE_ORDER.get):
            s = by_scope[scope]
            if "scores" in parts or "convergence" in parts:
                score = indices.score_all(s, cfg.aco_ordering)
                bundle.scores.append(score)
                for measure, why in sorted(score.reasons.items()):
                    notes.append(f"{msa} {year} {scope}: {measure} undefined ({why})")
            if "curves" in parts:
                bundle.curves.append(distribution.sorted_rate_curve(s))
            if "summaries" in parts:
                bundle.summaries.append(distribution.quartile_summary(s, cfg.weighted_quantiles))
        if not split:
            continue
        city, noncity, metro = by_scope[CITY], by_scope[NONCITY], by_scope[METRO]
        if "classifications" in parts:
            for pct in (50, 75):
                threshold = analysis.high_poverty_threshold(city, pct, cfg.weighted_quantiles)
                bundle.classifications.append(analysis.classify_suburban(noncity, metro, threshold, pct))
        if "group_means" in parts:
            pct = cfg.percentile_for(msa)
            threshold = analysis.high_poverty_threshold(city, pct, cfg.weighted_quantiles)
            bundle.group_means.append(analysis.group_means(city, noncity, threshold, cfg.weighted_group_means))

    if "buckets" in parts:
        breaks_by_msa = {}
        for msa in sorted({m for m, _ in snaps}):
            breaks_by_msa[msa] = _reference_breaks(cfg, snaps, msa, notes)
        for (msa, year), by_scope in snaps.items():
            breaks = breaks_by_msa[msa]
            if breaks is None:
                continue
            for tract_id, y, k in distribution.bucket_assignments(by_scope[METRO], breaks):
                bundle.buckets.append((msa, tract_id, y, k))

    if "convergence" in parts:
        for msa, series in analysis.series_from_scores(bundle.scores).items():
            years = {y for (_, _, y) in series}
            if len(years) < 2:
                continue
            try:
                bundle.convergence.append(analysis.convergence_verdict(series, cfg.flat_tol, msa))
            except DataError as exc:
                notes.append(f"{msa}: convergence skipped ({exc})")
        if "scores" not in parts:
            bundle.scores = []

    notes.extend(_reference_notes(bundle.classifications, cfg))
    _sort(bundle)
    bundle.provenance = {
        "inputs": dict(sorted((inputs or {}).items())),
        "config": cfg.echo(),
        "notes": notes,
    }
    return bundle


def _reference_notes(rows: Sequence[ClassificationRow], cfg: Config) -> list[str]:
    printed = {(c["msa"], int(c["year"]), int(c["percentile"])): c["cell"] for c in cfg.reference_cells}
    notes = []
    for row in rows:
        ref = printed.get((row.msa, row.year, row.percentile_used))
        cell = format_classification_cell(row)
        if ref is not None and ref != cell:
            notes.append(
                f"{row.msa} {row.year} p{row.percentile_used}: recomputed {cell} differs from reference {ref}"
            )
    return notes


def _sort(bundle: ReportBundle) -> None:
    ident = lambda x: (x.msa, x.year, SCOPE_ORDER.get(x.scope, 9))  # noqa: E731
    bundle.scores.sort(key=ident)
    bundle.curves.sort(key=ident)
    bundle.summaries.sort(key=ident)
    bundle.classifications.sort(key=lambda r: (r.msa, r.year, r.percentile_used))
    bundle.group_means.sort(key=lambda g: (g.msa, g.year))
    bundle.convergence.sort(key=lambda c: c.msa)
    bundle.buckets.sort(key=lambda b: (b[0], b[2], b[1]))


def file_digest(path: str) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            h.update(chunk)
    return "sha256:" + h.hexdigest()


# --------------------------------------------------------------------------
# emission


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return out.getvalue()


def bundle_json(bundle: ReportBundle) -> str:
    return json.dumps(bundle.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"


def bundle_tables(bundle: ReportBundle) -> dict[str, str]:
    """CSV text per table kind; only kinds present in the bundle."""
    tables = {}
    if bundle.scores:
        cols = ("msa", "year", "scope", "gini", "isolation", "exposure", "aco", "aco_ordering")
        tables["scores.csv"] = _csv(cols, ([s.to_dict()[c] for c in cols] for s in bundle.scores))
    if bundle.curves:
        tables["curves.csv"] = _csv(
            ("msa", "year", "scope", "position", "rate"),
            ((c.msa, c.year, c.scope, x, y) for c in bundle.curves for x, y in c.points),
        )
        tables["curve_means.csv"] = _csv(
            ("msa", "year", "scope", "mean_weighted", "mean_unweighted"),
            ((c.msa, c.year, c.scope, c.mean_weighted, c.mean_unweighted) for c in bundle.curves),
        )
    if bundle.summaries:
        cols = ("msa", "year", "scope", "q0", "q25", "q50", "q75", "q100", "weighted")
        tables["summaries.csv"] = _csv(cols, ([s.to_dict()[c] for c in cols] for s in bundle.summaries))
    if bundle.classifications:
        cols = (
            "msa", "year", "percentile_used", "threshold_rate", "count_exceeding", "count_total",
            "pct_of_tracts", "population_exceeding", "metro_population", "pop_share",
        )
        tables["classifications.csv"] = _csv(
            cols + ("tracts_cell", "population_cell"),
            (
                [r.to_dict()[c] for c in cols] + [format_classification_cell(r), format_population_cell(r)]
                for r in bundle.classifications
            ),
        )
        tables["suburban_table.txt"] = suburban_table_text(bundle.classifications)
    if bundle.group_means:
        rows = []
        for g in bundle.group_means:
            for name in analysis.GROUPS:
                stats = g.groups[name]
                for var in analysis.VARIABLES:
                    rows.append((g.msa, g.year, name, stats.count, var, stats.means[var], stats.missing.get(var, 0)))
        tables["group_means.csv"] = _csv(("msa", "year", "group", "count", "variable", "mean", "missing"), rows)
    if bundle.convergence:
        rows = []
        for c in bundle.convergence:
            for m, points in c.trajectories.items():
                for p in points:
                    rows.append((c.msa, m, p.year, p.city, p.noncity, p.gap, c.verdicts[m], c.aggregate))
        tables["convergence.csv"] = _csv(
            ("msa", "measure", "year", "city", "noncity", "gap", "verdict", "aggregate"), rows
        )
    if bundle.buckets:
        tables["buckets.csv"] = _csv(("msa", "tract_id", "year", "class"), bundle.buckets)
    return tables


def emit_report_bundle(bundle: ReportBundle, out_dir: str, fmt: str = "json", figures: bool = False) -> list[str]:
    """Write the bundle under ``out_dir``; returns the paths written, sorted.

    ``json`` writes one ``bundle.json``; ``csv`` writes one file per table
    kind plus ``provenance.json``. Output bytes depend only on the bundle.
    """
    if bundle.is_empty():
        raise DataError("empty report bundle")
    if fmt not in ("json", "csv"):
        raise ValueError(f"format must be json or csv, got {fmt!r}")
    files: dict[str, str] = {}
    if fmt == "json":
        files["bundle.json"] = bundle_json(bundle)
    else:
        files.update(bundle_tables(bundle))
        files["provenance.json"] = json.dumps(bundle.provenance, indent=2, sort_keys=True) + "\n"
    if figures:
        for name, svg in bundle_figures(bundle).items():
            files[os.path.join("figures", name)] = svg

    os.makedirs(out_dir, exist_ok=True)
    written = []
    for name in sorted(files):
        path = os.path.join(out_dir, name)
        os.makedirs(os.path.dirname(path), exist_ok=True)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(files[name])
        written.append(path)
    return written


# --------------------------------------------------------------------------
# SVG

PALETTE = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#7f7f7f")
WIDTH, HEIGHT = 640, 400
MARGIN_LEFT, MARGIN_RIGHT, MARGIN_TOP, MARGIN_BOTTOM = 60, 140, 30, 40


def _num(v: float) -> str:
    text = f"{v:.2f}"
    return "0.00" if text == "-0.00" else text


def plot_area(width: int = WIDTH, height: int = HEIGHT) -> tuple[float, float, float, float]:
    """(left, top, right, bottom) pixel bounds of the plotting region."""
    return MARGIN_LEFT, MARGIN_TOP, width - MARGIN_RIGHT, height - MARGIN_BOTTOM


def render_series_svg(
    series: Sequence[tuple[str, Sequence[tuple[float, float]]]],
    x_range: tuple[float, float],
    y_range: tuple[float, float],
    title: str = "",
    width: int = WIDTH,
    height: int = HEIGHT,
) -> str:
    """A standalone SVG line chart: one polyline and one legend entry per series."""
    if not series:
        raise ValueError("need at least one series")
    (x0, x1), (y0, y1) = x_range, y_range
    for v in (x0, x1, y0, y1):
        if not math.isfinite(v):
            raise ValueError("axis ranges must be finite")
    if x1 <= x0 or y1 <= y0:
        raise ValueError("axis ranges must be increasing")
    left, top, right, bottom = plot_area(width, height)

    def px(x: float) -> float:
        return left + (x - x0) / (x1 - x0) * (right - left)

    def py(y: float) -> float:
        return bottom - (y - y0) / (y1 - y0) * (bottom - top)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" viewBox="0 0 {width} {height}">',
        f'<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>',
    ]
    if title:
        parts.append(f'<text x="{_num(left)}" y="{_num(top - 10)}" font-size="14">{escape(title)}</text>')
    parts.append(
        f'<line class="axis" x1="{_num(left)}" y1="{_num(bottom)}" x2="{_num(right)}" y2="{_num(bottom)}" stroke="black"/>'
    )
    parts.append(
        f'<line class="axis" x1="{_num(left)}" y1="{_num(top)}" x2="{_num(left)}" y2="{_num(bottom)}" stroke="black"/>'
    )
    for frac in (0.0, 0.5, 1.0):
        yv = y0 + frac * (y1 - y0)
        xv = x0 + frac * (x1 - x0)
        parts.append(
            f'<text class="tick" x="{_num(left - 6)}" y="{_num(py(yv) + 4)}" font-size="10" text-anchor="end">{yv:.3g}</text>'
        )
        parts.append(
            f'<text class="tick" x="{_num(px(xv))}" y="{_num(bottom + 16)}" font-size="10" text-anchor="middle">{xv:.6g}</text>'
        )

    for i, (label, points) in enumerate(series):
        if len(points) < 2:
            raise ValueError(f"series {label!r} needs at least 2 points")
        coords = []
        for x, y in points:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise ValueError(f"series {label!r} has a non-finite coordinate")
            coords.append(f"{_num(px(x))},{_num(py(y))}")
        color = PALETTE[i % len(PALETTE)]
        parts.append(
            f'<polyline class="series" fill="none" stroke="{color}" stroke-width="1.5" points="{" ".join(coords)}"/>'
        )
        ly = top + 14 + 18 * i
        parts.append(
            f'<line class="legend-key" x1="{_num(right + 10)}" y1="{_num(ly - 4)}" x2="{_num(right + 30)}" y2="{_num(ly - 4)}" stroke="{color}" stroke-width="2"/>'
        )
        parts.append(f'<text class="legend" x="{_num(right + 36)}" y="{_num(ly)}" font-size="12">{escape(label)}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


_SCOPE_LABEL = {METRO: "M", CITY: "C", NONCITY: "N"}


def _padded(lo: float, hi: float) -> tuple[float, float]:
    if hi - lo < 1e-9:
        return lo - 0.5, hi + 0.5
    pad = 0.05 * (hi - lo)
    return lo - pad, hi + pad


def bundle_figures(bundle: ReportBundle) -> dict[str, str]:
    """Score trajectories per (msa, measure) and sorted-rate curves per (msa, year)."""
    figures = {}
    msas = sorted({s.msa for s in bundle.scores})
    for msa in msas:
        for measure in analysis.MEASURES:
            series = []
            for scope in (METRO, CITY, NONCITY):
                pts = [(s.year, getattr(s, measure)) for s in bundle.scores if s.msa == msa and s.scope == scope]
                pts = [(float(x), y) for x, y in pts if y is not None]
                if len(pts) >= 2:
                    series.append((_SCOPE_LABEL[scope], pts))
            if not series:
                continue
            xs = [x for _, pts in series for x, _ in pts]
            ys = [y for _, pts in series for _, y in pts]
            figures[f"scores_{msa}_{measure}.svg"] = render_series_svg(
                series, (min(xs), max(xs)), _padded(min(ys), max(ys)), title=f"{msa} {measure}"
            )
    for key in sorted({(c.msa, c.year) for c in bundle.curves}):
        series = [
            (_SCOPE_LABEL[c.scope], c.points)
            for c in bundle.curves
            if (c.msa, c.year) == key and len(c.points) >= 2
        ]
        if series:
            figures[f"curves_{key[0]}_{key[1]}.svg"] = render_series_svg(
                series, (0.0, 1.0), (0.0, 1.0), title=f"{key[0]} {key[1]} tract poverty rates, sorted"
            )
    return figures
