"""High-poverty suburban tracts, group means and city/suburb convergence."""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Mapping

from .distribution import snapshot_quantile
from .errors import DataError
from .ingest import CITY, EXTRA_COLUMNS, METRO, NONCITY, Snapshot, TractRecord

MEASURES = ("gini", "isolation", "exposure", "aco")
GROUPS = ("C-H", "NC-H", "NC-L", "NC")
POVERTY_VARIABLE = "pct_poverty"
VARIABLES = (POVERTY_VARIABLE,) + EXTRA_COLUMNS

CONVERGING = "converging"
DIVERGING = "diverging"
FLAT = "flat"
UNDEFINED = "undefined"
DEFAULT_FLAT_TOL = 0.01


@dataclass(frozen=True)
class ClassificationRow:
    msa: str
    year: int
    percentile_used: int
    threshold_rate: float
    count_exceeding: int
    count_total: int
    population_exceeding: int
    metro_population: int

    @property
    def pct_of_tracts(self) -> float:
        return self.count_exceeding / self.count_total

    @property
    def pop_share(self) -> float:
        return self.population_exceeding / self.metro_population

    def to_dict(self) -> dict:
        return {
            "msa": self.msa,
            "year": self.year,
            "percentile_used": self.percentile_used,
            "threshold_rate": self.threshold_rate,
            "count_exceeding": self.count_exceeding,
            "count_total": self.count_total,
            "pct_of_tracts": self.pct_of_tracts,
            "population_exceeding": self.population_exceeding,
            "metro_population": self.metro_population,
            "pop_share": self.pop_share,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ClassificationRow":
        return cls(
            d["msa"], int(d["year"]), int(d["percentile_used"]), d["threshold_rate"],
            int(d["count_exceeding"]), int(d["count_total"]),
            int(d["population_exceeding"]), int(d["metro_population"]),
        )


@dataclass(frozen=True)
class GroupStats:
    count: int
    means: dict[str, float | None]
    missing: dict[str, int] = field(default_factory=dict)


@dataclass(frozen=True)
class GroupMeans:
    msa: str
    year: int
    threshold_rate: float
    weighted: bool
    groups: dict[str, GroupStats]

    def to_dict(self) -> dict:
        return {
            "msa": self.msa,
            "year": self.year,
            "threshold_rate": self.threshold_rate,
            "weighted": self.weighted,
            "groups": {
                name: {"count": g.count, "means": dict(g.means), "missing": dict(g.missing)}
                for name, g in self.groups.items()
            },
        }

    @classmethod
    def from_dict(cls, d: dict) -> "GroupMeans":
        groups = {
            name: GroupStats(int(g["count"]), dict(g["means"]), {k: int(v) for k, v in g["missing"].items()})
            for name, g in d["groups"].items()
        }
        return cls(d["msa"], int(d["year"]), d["threshold_rate"], bool(d["weighted"]), groups)


@dataclass(frozen=True)
class GapPoint:
    year: int
    city: float | None
    noncity: float | None

    @property
    def gap(self) -> float | None:
        if self.city is None or self.noncity is None:
            return None
        return self.city - self.noncity


@dataclass(frozen=True)
class ConvergenceReport:
    msa: str
    flat_tol: float
    trajectories: dict[str, tuple[GapPoint, ...]]
    verdicts: dict[str, str]
    aggregate: str

    def to_dict(self) -> dict:
        return {
            "msa": self.msa,
            "flat_tol": self.flat_tol,
            "measures": {
                m: {
                    "verdict": self.verdicts[m],
                    "trajectory": [
                        {"year": p.year, "city": p.city, "noncity": p.noncity, "gap": p.gap}
                        for p in self.trajectories[m]
                    ],
                }
                for m in self.trajectories
            },
            "aggregate": self.aggregate,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ConvergenceReport":
        trajectories = {
            m: tuple(GapPoint(int(p["year"]), p["city"], p["noncity"]) for p in v["trajectory"])
            for m, v in d["measures"].items()
        }
        verdicts = {m: v["verdict"] for m, v in d["measures"].items()}
        return cls(d["msa"], d["flat_tol"], trajectories, verdicts, d["aggregate"])


def high_poverty_threshold(city: Snapshot, percentile: int = 75, weighted: bool = False) -> float:
    """The city's 50th or 75th percentile tract poverty rate."""
    if city.scope != CITY:
        raise DataError(f"threshold needs a city snapshot, got scope {city.scope!r}")
    if percentile not in (50, 75):
        raise ValueError(f"percentile must be 50 or 75, got {percentile}")
    return snapshot_quantile(city, percentile / 100, weighted)


def classify_suburban(
    noncity: Snapshot, metro: Snapshot, threshold: float, percentile_used: int
) -> ClassificationRow:
    """Count noncity tracts whose rate strictly exceeds ``threshold``."""
    if noncity.scope != NONCITY:
        raise DataError(f"expected a noncity snapshot, got scope {noncity.scope!r}")
    if metro.scope != METRO:
        raise DataError(f"expected a metro snapshot, got scope {metro.scope!r}")
    if (noncity.msa, noncity.year) != (metro.msa, metro.year):
        raise DataError(
            f"msa/year mismatch: noncity {noncity.msa} {noncity.year}, metro {metro.msa} {metro.year}"
        )
    above = [t for t in noncity.tracts if t.rate > threshold]
    return ClassificationRow(
        msa=noncity.msa,
        year=noncity.year,
        percentile_used=percentile_used,
        threshold_rate=threshold,
        count_exceeding=len(above),
        count_total=noncity.n,
        population_exceeding=sum(t.universe for t in above),
        metro_population=metro.T,
    )


def _value(t: TractRecord, var: str) -> float | None:
    if var == POVERTY_VARIABLE:
        return 100.0 * t.rate
    return t.extras.get(var)


def _stats(tracts: list[TractRecord], weighted: bool) -> GroupStats:
    means: dict[str, float | None] = {}
    missing: dict[str, int] = {}
    for var in VARIABLES:
        pairs = [(v, t.universe) for t in tracts if (v := _value(t, var)) is not None]
        missing[var] = len(tracts) - len(pairs)
        if not pairs:
            means[var] = None
        elif weighted:
            means[var] = math.fsum(v * w for v, w in pairs) / math.fsum(w for _, w in pairs)
        else:
            means[var] = math.fsum(v for v, _ in pairs) / len(pairs)
    return GroupStats(len(tracts), means, missing)


def group_means(city: Snapshot, noncity: Snapshot, threshold: float, weighted: bool = False) -> GroupMeans:
    """Means of the six variables for C-H, NC-H, NC-L and NC.

    C-H are city tracts above ``threshold``; NC-H/NC-L split the noncity
    tracts at it (strictly above / at or below). Tracts missing a variable
    drop out of that variable's mean and are counted in ``missing``.
    """
    if (city.msa, city.year) != (noncity.msa, noncity.year):
        raise DataError("city and noncity snapshots differ in msa/year")
    if city.scope != CITY or noncity.scope != NONCITY:
        raise DataError("group_means needs a city and a noncity snapshot")
    c_high = [t for t in city.tracts if t.rate > threshold]
    nc_high = [t for t in noncity.tracts if t.rate > threshold]
    nc_low = [t for t in noncity.tracts if t.rate <= threshold]
    groups = {
        "C-H": _stats(c_high, weighted),
        "NC-H": _stats(nc_high, weighted),
        "NC-L": _stats(nc_low, weighted),
        "NC": _stats(list(noncity.tracts), weighted),
    }
    return GroupMeans(city.msa, city.year, threshold, weighted, groups)


def _verdict(first: float | None, last: float | None, flat_tol: float) -> str:
    if first is None or last is None:
        return UNDEFINED
    a, b = abs(first), abs(last)
    if b < a - flat_tol:
        return CONVERGING
    if b > a + flat_tol:
        return DIVERGING
    return FLAT


def aggregate_verdict(verdicts: Mapping[str, str]) -> str:
    """Most common verdict among defined measures; a tie for first is flat."""
    votes = Counter(v for v in verdicts.values() if v != UNDEFINED)
    if not votes:
        return UNDEFINED
    ranked = votes.most_common()
    if len(ranked) > 1 and ranked[0][1] == ranked[1][1]:
        return FLAT
    return ranked[0][0]


def convergence_verdict(
    series: Mapping[tuple[str, str, int], float | None],
    flat_tol: float = DEFAULT_FLAT_TOL,
    msa: str = "",
) -> ConvergenceReport:
    """Compare |city - noncity| at the first and last common year per measure.

    ``series`` maps (measure, scope, year) to a value; None marks an
    undefined score.
    """
    measures = sorted({m for m, _, _ in series}, key=lambda m: (MEASURES.index(m) if m in MEASURES else 99, m))
    if not measures:
        raise DataError("empty convergence series")
    common: set[int] | None = None
    for m in measures:
        years = {y for mm, s, y in series if mm == m and s == CITY} & {
            y for mm, s, y in series if mm == m and s == NONCITY
        }
        common = years if common is None else common & years
    years = sorted(common or ())
    if len(years) < 2:
        raise DataError(f"need at least 2 common years with city and noncity values, got {years}")

    trajectories = {}
    verdicts = {}
    for m in measures:
        points = tuple(GapPoint(y, series[(m, CITY, y)], series[(m, NONCITY, y)]) for y in years)
        trajectories[m] = points
        verdicts[m] = _verdict(points[0].gap, points[-1].gap, flat_tol)
    return ConvergenceReport(msa, flat_tol, trajectories, verdicts, aggregate_verdict(verdicts))


def series_from_scores(scores) -> dict[str, dict[tuple[str, str, int], float | None]]:
    """Regroup ScoreSets into per-msa convergence series."""
    out: dict[str, dict[tuple[str, str, int], float | None]] = {}
    for s in scores:
        if s.scope not in (CITY, NONCITY):
            continue
        series = out.setdefault(s.msa, {})
        for m in MEASURES:
            series[(m, s.scope, s.year)] = getattr(s, m)
    return dict(sorted(out.items()))
