"""Sorted rate curves, quartile thresholds and four-class bucketing."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .ingest import Snapshot

QUARTILE_LEVELS = (0.0, 0.25, 0.5, 0.75, 1.0)


@dataclass(frozen=True)
class RateCurve:
    msa: str
    year: int
    scope: str
    points: tuple[tuple[float, float], ...]
    mean_weighted: float
    mean_unweighted: float

    def to_dict(self) -> dict:
        return {
            "msa": self.msa,
            "year": self.year,
            "scope": self.scope,
            "points": [list(p) for p in self.points],
            "mean_weighted": self.mean_weighted,
            "mean_unweighted": self.mean_unweighted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RateCurve":
        return cls(
            d["msa"], int(d["year"]), d["scope"],
            tuple((float(x), float(y)) for x, y in d["points"]),
            d["mean_weighted"], d["mean_unweighted"],
        )


@dataclass(frozen=True)
class QuantileSummary:
    msa: str
    year: int
    scope: str
    thresholds: tuple[float, float, float, float, float]
    weighted: bool = False

    @property
    def breaks(self) -> tuple[float, float, float]:
        """The 25/50/75 thresholds, as used by bucketize."""
        return self.thresholds[1], self.thresholds[2], self.thresholds[3]

    def to_dict(self) -> dict:
        q0, q25, q50, q75, q100 = self.thresholds
        return {
            "msa": self.msa,
            "year": self.year,
            "scope": self.scope,
            "q0": q0,
            "q25": q25,
            "q50": q50,
            "q75": q75,
            "q100": q100,
            "weighted": self.weighted,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "QuantileSummary":
        return cls(
            d["msa"], int(d["year"]), d["scope"],
            (d["q0"], d["q25"], d["q50"], d["q75"], d["q100"]),
            bool(d.get("weighted", False)),
        )


def quantile(values: Sequence[float], q: float) -> float:
    """Linear interpolation between order statistics (h = (n-1)q + 1)."""
    if not values:
        raise ValueError("quantile of an empty sequence")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    v = sorted(values)
    h = (len(v) - 1) * q
    lo = math.floor(h)
    frac = h - lo
    if frac == 0.0:
        return v[lo]
    return v[lo] + frac * (v[lo + 1] - v[lo])


def weighted_quantile(values: Sequence[float], weights: Sequence[float], q: float) -> float:
    """Population-weighted quantile.

    Each value sits at the midpoint of its cumulative weight interval and the
    inverse CDF is linear between those midpoints, flat beyond the ends.
    """
    if not values:
        raise ValueError("quantile of an empty sequence")
    if len(values) != len(weights):
        raise ValueError("values and weights differ in length")
    if not 0.0 <= q <= 1.0:
        raise ValueError(f"q must lie in [0, 1], got {q}")
    pairs = sorted(zip(values, weights))
    total = math.fsum(w for _, w in pairs)
    if total <= 0:
        raise ValueError("weights must sum to a positive number")
    if q == 0.0:
        return pairs[0][0]
    if q == 1.0:
        return pairs[-1][0]
    mids = []
    cum = 0.0
    for _, w in pairs:
        mids.append((cum + w / 2) / total)
        cum += w
    if q <= mids[0]:
        return pairs[0][0]
    if q >= mids[-1]:
        return pairs[-1][0]
    for i in range(1, len(mids)):
        if q <= mids[i]:
            lo, hi = mids[i - 1], mids[i]
            f = (q - lo) / (hi - lo) if hi > lo else 0.0
            return pairs[i - 1][0] + f * (pairs[i][0] - pairs[i - 1][0])
    return pairs[-1][0]


def snapshot_quantile(s: Snapshot, q: float, weighted: bool = False) -> float:
    if weighted:
        return weighted_quantile(s.rates, [t.universe for t in s.tracts], q)
    return quantile(s.rates, q)


def sorted_rate_curve(s: Snapshot) -> RateCurve:
    rates = sorted(s.rates)
    n = len(rates)
    if n == 1:
        points = ((0.0, rates[0]),)
    else:
        points = tuple((i / (n - 1), r) for i, r in enumerate(rates))
    unweighted = math.fsum(rates) / n
    # fsum/n can land one ulp outside the data range when all rates are equal
    unweighted = min(max(unweighted, rates[0]), rates[-1])
    return RateCurve(s.msa, s.year, s.scope, points, s.X / s.T, unweighted)


def quartile_summary(s: Snapshot, weighted: bool = False) -> QuantileSummary:
    thresholds = tuple(snapshot_quantile(s, q, weighted) for q in QUARTILE_LEVELS)
    return QuantileSummary(s.msa, s.year, s.scope, thresholds, weighted)


def bucketize(rate: float, breaks: tuple[float, float, float]) -> int:
    """Class 0..3; each break is the inclusive upper edge of its class."""
    b25, b50, b75 = breaks
    if not b25 <= b50 <= b75:
        raise ValueError(f"breaks must be non-decreasing, got {breaks}")
    if rate <= b25:
        return 0
    if rate <= b50:
        return 1
    if rate <= b75:
        return 2
    return 3


def bucket_assignments(s: Snapshot, breaks: tuple[float, float, float]) -> list[tuple[str, int, int]]:
    """(tract_id, year, class) for every tract in the snapshot, by tract_id."""
    rows = [(t.tract_id, t.year, bucketize(t.rate, breaks)) for t in s.tracts]
    return sorted(rows)
