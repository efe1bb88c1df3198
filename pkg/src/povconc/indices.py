"""The four poverty concentration measures for one snapshot.

All sums run over tracts in (rate, tract_id) order so results do not
depend on input order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .errors import DegenerateError
from .ingest import Snapshot, TractRecord, sort_key

POPULATION = "population"
AREA = "area"
ACO_ORDERINGS = (POPULATION, AREA)

QUINTILES = 5
ACO_EPS = 1e-12


@dataclass(frozen=True)
class LorenzCurve:
    """Cumulative poor share ``L[k]`` at cumulative population share ``k/5``."""

    points: tuple[tuple[float, float], ...]

    @property
    def shares(self) -> tuple[float, ...]:
        return tuple(L for _, L in self.points)


@dataclass(frozen=True)
class AcoBreakpoints:
    n1: int
    T1: int
    n2: int
    T2: int


@dataclass(frozen=True)
class ScoreSet:
    msa: str
    year: int
    scope: str
    gini: float | None
    isolation: float | None
    exposure: float | None
    aco: float | None
    aco_ordering: str = POPULATION
    reasons: dict[str, str] = field(default_factory=dict, compare=False)

    def to_dict(self) -> dict:
        return {
            "msa": self.msa,
            "year": self.year,
            "scope": self.scope,
            "gini": self.gini,
            "isolation": self.isolation,
            "exposure": self.exposure,
            "aco": self.aco,
            "aco_ordering": self.aco_ordering,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScoreSet":
        return cls(
            d["msa"], int(d["year"]), d["scope"],
            d["gini"], d["isolation"], d["exposure"], d["aco"], d["aco_ordering"],
        )


def _ordered(s: Snapshot) -> list[TractRecord]:
    return sorted(s.tracts, key=sort_key)


def _require_poor(s: Snapshot) -> None:
    if s.X <= 0:
        raise DegenerateError("no poor population")


def lorenz_quintiles(s: Snapshot) -> LorenzCurve:
    """Lorenz curve over five equal-population groups, tracts by rising rate.

    A tract straddling a group boundary is split: each part keeps the
    tract's poverty rate.
    """
    _require_poor(s)
    tracts = _ordered(s)
    T, X = s.T, s.X

    shares = [0.0]
    cum_t = 0
    cum_x = 0
    i = 0
    for k in range(1, QUINTILES):
        bound = k * T / QUINTILES
        # advance to the tract containing the boundary
        while cum_t + tracts[i].universe < bound:
            cum_t += tracts[i].universe
            cum_x += tracts[i].poor
            i += 1
        poor_at = cum_x + tracts[i].rate * (bound - cum_t)
        shares.append(poor_at / X)
    shares.append(1.0)
    return LorenzCurve(tuple((k / QUINTILES, L) for k, L in enumerate(shares)))


def gini(s: Snapshot) -> float:
    """Gini from the quintile Lorenz curve by the trapezoid rule."""
    L = lorenz_quintiles(s).shares
    area = sum(L[k] + L[k - 1] for k in range(1, QUINTILES + 1))
    return 1.0 - area / QUINTILES


def isolation(s: Snapshot) -> float:
    X, T = s.X, s.T
    if X <= 0 or X >= T:
        raise DegenerateError("degenerate composition: need 0 < poor total < universe total")
    nonpoor = T - X
    total = sum(abs(t.poor / X - (t.universe - t.poor) / nonpoor) for t in _ordered(s))
    return 0.5 * total


def exposure(s: Snapshot) -> float:
    _require_poor(s)
    X = s.X
    return sum((t.poor / X) * (t.poor / t.universe) for t in _ordered(s))


def _aco_order(s: Snapshot, ordering: str) -> list[TractRecord]:
    if ordering == POPULATION:
        return sorted(s.tracts, key=lambda t: (t.universe, t.tract_id))
    if ordering == AREA:
        return sorted(s.tracts, key=lambda t: (t.land_area, t.tract_id))
    raise ValueError(f"unknown ACO ordering {ordering!r}")


def aco_breakpoints(s: Snapshot, ordering: str = POPULATION) -> AcoBreakpoints:
    """Whole-tract breakpoints where cumulative universe first reaches X.

    ``n1``/``T1`` count from the small end of the ordering, ``n2``/``T2``
    from the large end (tracts ``n2..n``, 1-based).
    """
    _require_poor(s)
    tracts = _aco_order(s, ordering)
    X = s.X
    cum = 0
    for i, t in enumerate(tracts, start=1):
        cum += t.universe
        if cum >= X:
            n1, T1 = i, cum
            break
    cum = 0
    for i in range(len(tracts), 0, -1):
        cum += tracts[i - 1].universe
        if cum >= X:
            n2, T2 = i, cum
            break
    return AcoBreakpoints(n1, T1, n2, T2)


def aco(s: Snapshot, ordering: str = POPULATION) -> float | None:
    """Absolute concentration. Returns None when the baseline spread vanishes."""
    _require_poor(s)
    if s.n < 2:
        raise DegenerateError("absolute concentration needs at least two tracts")
    tracts = _aco_order(s, ordering)
    bp = aco_breakpoints(s, ordering)

    poor_area = sum(t.poor * t.land_area for t in tracts) / s.X
    low = sum(t.universe * t.land_area for t in tracts[: bp.n1]) / bp.T1
    high = sum(t.universe * t.land_area for t in tracts[bp.n2 - 1 :]) / bp.T2
    denom = high - low
    if abs(denom) < ACO_EPS:
        return None
    return 1.0 - (poor_area - low) / denom


def _try(fn, *args):
    try:
        return fn(*args), None
    except DegenerateError as exc:
        return None, str(exc)


def score_all(s: Snapshot, ordering: str = POPULATION) -> ScoreSet:
    """All four measures; a degenerate measure is None with its reason kept."""
    if ordering not in ACO_ORDERINGS:
        raise ValueError(f"unknown ACO ordering {ordering!r}")
    reasons = {}
    values = {}
    for name, fn, args in (
        ("gini", gini, (s,)),
        ("isolation", isolation, (s,)),
        ("exposure", exposure, (s,)),
        ("aco", aco, (s, ordering)),
    ):
        value, why = _try(fn, *args)
        if name == "aco" and value is None and why is None:
            why = "zero denominator: tracts indistinguishable in ordering key and area"
        values[name] = value
        if why:
            reasons[name] = why
    return ScoreSet(s.msa, s.year, s.scope, **values, aco_ordering=ordering, reasons=reasons)


def score_many(snapshots: Sequence[Snapshot], ordering: str = POPULATION) -> list[ScoreSet]:
    return [score_all(s, ordering) for s in snapshots]
