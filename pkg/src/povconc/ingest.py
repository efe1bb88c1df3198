"""Tract tables, place boundaries, core-city membership and snapshots.

Tract rows come from a canonical comma-separated file::

    tract_id,msa,year,poor,universe,land_area,centroid_lon,centroid_lat[,scope][,pct_*...]

``universe`` is the count of persons (or households) for whom poverty is
determined; it is used both as the poverty denominator and as the tract's
population weight.
"""

from __future__ import annotations

import csv
import io
import json
import math
import warnings
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Sequence

from .errors import DataError, DuplicateKeyError, GeometryError, RowError, SchemaError

CITY = "city"
NONCITY = "noncity"
UNASSIGNED = "unassigned"
METRO = "metro"

SCOPES = (CITY, NONCITY, UNASSIGNED)
SNAPSHOT_SCOPES = (METRO, CITY, NONCITY)

REQUIRED_COLUMNS = (
    "tract_id",
    "msa",
    "year",
    "poor",
    "universe",
    "land_area",
    "centroid_lon",
    "centroid_lat",
)
EXTRA_COLUMNS = (
    "pct_renter",
    "pct_vacant",
    "pct_second_mortgage",
    "pct_no_hs",
    "pct_white",
)
CANONICAL_COLUMNS = REQUIRED_COLUMNS + ("scope",) + EXTRA_COLUMNS


@dataclass(frozen=True)
class TractRecord:
    tract_id: str
    msa: str
    year: int
    poor: int
    universe: int
    land_area: float
    centroid_lon: float
    centroid_lat: float
    scope: str = UNASSIGNED
    extras: Mapping[str, float] = field(default_factory=dict)

    @property
    def rate(self) -> float:
        return self.poor / self.universe

    @property
    def key(self) -> tuple[str, str, int]:
        return (self.tract_id, self.msa, self.year)


@dataclass(frozen=True)
class PlaceBoundary:
    """A named place. ``rings`` holds one entry per polygon: ``[outer, hole, ...]``."""

    place_name: str
    rings: tuple[tuple[tuple[tuple[float, float], ...], ...], ...]


@dataclass(frozen=True)
class Snapshot:
    msa: str
    year: int
    scope: str
    tracts: tuple[TractRecord, ...]
    X: int
    T: int

    @property
    def n(self) -> int:
        return len(self.tracts)

    @property
    def rates(self) -> list[float]:
        return [t.rate for t in self.tracts]

    @property
    def identity(self) -> tuple[str, int, str]:
        return (self.msa, self.year, self.scope)


# --------------------------------------------------------------------------
# tract table


def _count(raw: str, name: str, line: int) -> int:
    try:
        value = float(raw)
    except ValueError:
        raise RowError(f"{name} is not numeric: {raw!r}", line=line) from None
    if not math.isfinite(value) or value != int(value):
        raise RowError(f"{name} is not a whole count: {raw!r}", line=line)
    return int(value)


def _real(raw: str, name: str, line: int) -> float:
    try:
        value = float(raw)
    except ValueError:
        raise RowError(f"{name} is not numeric: {raw!r}", line=line) from None
    if not math.isfinite(value):
        raise RowError(f"{name} is not finite: {raw!r}", line=line)
    return value


def _parse_row(row: dict[str, str], extras_present: Sequence[str], line: int) -> TractRecord:
    tract_id = row["tract_id"].strip()
    msa = row["msa"].strip()
    if not tract_id:
        raise RowError("empty tract_id", line=line)
    if not msa:
        raise RowError("empty msa", line=line)
    year = _count(row["year"], "year", line)

    poor = _count(row["poor"], "poor", line)
    universe = _count(row["universe"], "universe", line)
    if poor < 0:
        raise RowError("poor is negative", line=line)
    if universe <= 0:
        raise RowError("universe must be positive", line=line)
    if poor > universe:
        raise RowError("poor exceeds universe", line=line)
    land_area = _real(row["land_area"], "land_area", line)
    if land_area <= 0:
        raise RowError("land_area must be positive", line=line)
    lon = _real(row["centroid_lon"], "centroid_lon", line)
    lat = _real(row["centroid_lat"], "centroid_lat", line)

    scope = (row.get("scope") or "").strip().lower() or UNASSIGNED
    if scope not in SCOPES:
        raise RowError(f"unknown scope {scope!r}", line=line)

    extras: dict[str, float] = {}
    for name in extras_present:
        raw = (row.get(name) or "").strip()
        if not raw:
            continue
        value = _real(raw, name, line)
        if not 0.0 <= value <= 100.0:
            raise RowError(f"{name} outside [0, 100]: {raw!r}", line=line)
        extras[name] = value

    return TractRecord(tract_id, msa, year, poor, universe, land_area, lon, lat, scope, extras)


def parse_tract_table(text: str, source: str | None = None) -> list[TractRecord]:
    """Parse canonical tract CSV text into records, in file order.

    Raises SchemaError, RowError (with the 1-based file line) or
    DuplicateKeyError. Unknown columns are ignored with a warning.
    """
    if text.startswith("\ufeff"):
        text = text[1:]
    reader = csv.DictReader(io.StringIO(text))
    header = [h.strip() for h in (reader.fieldnames or [])]
    if not header:
        raise SchemaError("missing header row", source=source, line=1)
    reader.fieldnames = header
    for name in REQUIRED_COLUMNS:
        if name not in header:
            raise SchemaError(f"missing required column {name!r}", source=source, line=1)
    unknown = [h for h in header if h not in CANONICAL_COLUMNS]
    if unknown:
        warnings.warn(f"ignoring unknown columns: {', '.join(unknown)}", stacklevel=2)
    extras_present = [name for name in EXTRA_COLUMNS if name in header]

    records: list[TractRecord] = []
    seen: dict[tuple[str, str, int], int] = {}
    for row in reader:
        line = reader.line_num
        if None in row:
            raise RowError("more fields than header columns", source=source, line=line)
        if any(row.get(name) is None for name in REQUIRED_COLUMNS):
            raise RowError("fewer fields than header columns", source=source, line=line)
        try:
            record = _parse_row(row, extras_present, line)
        except DataError as exc:
            raise exc.with_source(source) if source else exc
        if record.key in seen:
            raise DuplicateKeyError(
                f"duplicate (tract_id, msa, year) {record.key}, first seen on line {seen[record.key]}",
                source=source,
                line=line,
            )
        seen[record.key] = line
        records.append(record)
    return records


def _fmt(value: float) -> str:
    return repr(float(value))


def format_tract_table(records: Iterable[TractRecord]) -> str:
    """Serialize records to canonical CSV (the inverse of parse_tract_table)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CANONICAL_COLUMNS)
    for r in records:
        row = [
            r.tract_id,
            r.msa,
            r.year,
            r.poor,
            r.universe,
            _fmt(r.land_area),
            _fmt(r.centroid_lon),
            _fmt(r.centroid_lat),
            r.scope,
        ]
        row += [_fmt(r.extras[name]) if name in r.extras else "" for name in EXTRA_COLUMNS]
        writer.writerow(row)
    return out.getvalue()


# --------------------------------------------------------------------------
# places


def _ring(coords, name: str) -> tuple[tuple[float, float], ...]:
    try:
        ring = tuple((float(p[0]), float(p[1])) for p in coords)
    except (TypeError, ValueError, IndexError):
        raise GeometryError(f"place {name!r}: malformed coordinates") from None
    if len(ring) < 4:
        raise GeometryError(f"place {name!r}: ring has fewer than 4 vertices")
    if ring[0] != ring[-1]:
        raise GeometryError(f"place {name!r}: unclosed ring")
    if not all(math.isfinite(c) for p in ring for c in p):
        raise GeometryError(f"place {name!r}: non-finite coordinate")
    return ring


def parse_place_polygons(text: str, source: str | None = None) -> list[PlaceBoundary]:
    """Read a GeoJSON FeatureCollection of named Polygon/MultiPolygon features."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise GeometryError(f"invalid JSON: {exc.msg}", source=source, line=exc.lineno) from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise GeometryError("expected a GeoJSON FeatureCollection", source=source)

    places = []
    for feature in doc.get("features") or []:
        props = feature.get("properties") or {}
        name = props.get("name")
        if not name:
            raise GeometryError("feature without a 'name' property", source=source)
        geom = feature.get("geometry") or {}
        kind = geom.get("type")
        coords = geom.get("coordinates")
        try:
            if kind == "Polygon":
                polygons = [coords]
            elif kind == "MultiPolygon":
                polygons = list(coords)
            else:
                raise GeometryError(f"place {name!r}: unsupported geometry type {kind!r}")
            rings = tuple(tuple(_ring(r, name) for r in poly) for poly in polygons)
            if any(not poly for poly in rings):
                raise GeometryError(f"place {name!r}: polygon without rings")
        except GeometryError as exc:
            raise exc.with_source(source) if source else exc
        places.append(PlaceBoundary(str(name), rings))
    return places


# --------------------------------------------------------------------------
# membership


def _on_segment(x: float, y: float, x1: float, y1: float, x2: float, y2: float) -> bool:
    cross = (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1)
    if cross != 0:
        return False
    return min(x1, x2) <= x <= max(x1, x2) and min(y1, y2) <= y <= max(y1, y2)


def _ring_status(x: float, y: float, ring: Sequence[tuple[float, float]]) -> int:
    """1 inside, 0 outside, -1 on the ring's boundary (even-odd ray cast)."""
    inside = False
    for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
        if _on_segment(x, y, x1, y1, x2, y2):
            return -1
        if (y1 > y) != (y2 > y):
            xcross = x1 + (y - y1) * (x2 - x1) / (y2 - y1)
            if x < xcross:
                inside = not inside
    return 1 if inside else 0


def point_in_place(lon: float, lat: float, place: PlaceBoundary) -> bool:
    """True when the point is in some polygon's outer ring and in none of its holes.

    Points on any ring edge (outer or hole) count as inside.
    """
    for polygon in place.rings:
        outer = _ring_status(lon, lat, polygon[0])
        if outer == 0:
            continue
        if outer == -1:
            return True
        in_hole = False
        for hole in polygon[1:]:
            status = _ring_status(lon, lat, hole)
            if status == -1:
                return True
            if status == 1:
                in_hole = True
                break
        if not in_hole:
            return True
    return False


def assign_membership(
    tracts: Sequence[TractRecord],
    place: PlaceBoundary | None,
    overrides: Mapping[str, str] | None = None,
) -> list[TractRecord]:
    """Set each tract's scope from its centroid, then apply overrides.

    With ``place=None`` the scopes already on the records are kept. Override
    keys are tract ids and apply to every year of that tract.
    """
    overrides = dict(overrides or {})
    known = {t.tract_id for t in tracts}
    for tract_id, scope in sorted(overrides.items()):
        if tract_id not in known:
            raise DataError(f"override references unknown tract_id {tract_id!r}")
        if scope not in (CITY, NONCITY):
            raise DataError(f"override for {tract_id!r} has invalid scope {scope!r}")

    out = []
    for t in tracts:
        scope = t.scope
        if place is not None:
            scope = CITY if point_in_place(t.centroid_lon, t.centroid_lat, place) else NONCITY
        scope = overrides.get(t.tract_id, scope)
        out.append(t if scope == t.scope else replace(t, scope=scope))
    return out


def parse_overrides(text: str, source: str | None = None) -> dict[str, str]:
    """Read an overrides CSV with columns tract_id, scope."""
    reader = csv.DictReader(io.StringIO(text.lstrip("\ufeff")))
    header = [h.strip() for h in (reader.fieldnames or [])]
    reader.fieldnames = header
    for name in ("tract_id", "scope"):
        if name not in header:
            raise SchemaError(f"missing required column {name!r}", source=source, line=1)
    out: dict[str, str] = {}
    for row in reader:
        tract_id = (row["tract_id"] or "").strip()
        scope = (row["scope"] or "").strip().lower()
        if not tract_id:
            raise RowError("empty tract_id", source=source, line=reader.line_num)
        if scope not in (CITY, NONCITY):
            raise RowError(f"scope must be city or noncity, got {scope!r}", source=source, line=reader.line_num)
        if tract_id in out:
            raise DuplicateKeyError(f"duplicate override for {tract_id!r}", source=source, line=reader.line_num)
        out[tract_id] = scope
    return out


# --------------------------------------------------------------------------
# snapshots


def sort_key(t: TractRecord) -> tuple[float, str]:
    return (t.rate, t.tract_id)


def build_snapshot(records: Sequence[TractRecord], msa: str, year: int, scope: str) -> Snapshot:
    """Select one (msa, year, scope) and compute its totals.

    ``scope`` is ``metro`` (all records), ``city`` or ``noncity``. Tracts are
    ordered by (poverty rate, tract_id).
    """
    if scope not in SNAPSHOT_SCOPES:
        raise ValueError(f"scope filter must be one of {SNAPSHOT_SCOPES}, got {scope!r}")
    msas = {r.msa for r in records}
    years = {r.year for r in records}
    if len(msas) > 1:
        raise DataError(f"mixed msas in snapshot input: {sorted(msas)}")
    if len(years) > 1:
        raise DataError(f"mixed years in snapshot input: {sorted(years)}")
    if records and (msa not in msas or year not in years):
        raise DataError(f"records are for {msas.pop()} {years.pop()}, not {msa} {year}")

    chosen = [r for r in records if scope == METRO or r.scope == scope]
    if not chosen:
        raise DataError(f"empty scope: {msa} {year} {scope}")
    chosen.sort(key=sort_key)
    return Snapshot(
        msa=msa,
        year=year,
        scope=scope,
        tracts=tuple(chosen),
        X=sum(r.poor for r in chosen),
        T=sum(r.universe for r in chosen),
    )


def group_records(records: Iterable[TractRecord]) -> dict[tuple[str, int], list[TractRecord]]:
    """Bucket records by (msa, year), keys sorted."""
    groups: dict[tuple[str, int], list[TractRecord]] = {}
    for r in records:
        groups.setdefault((r.msa, r.year), []).append(r)
    return dict(sorted(groups.items()))
