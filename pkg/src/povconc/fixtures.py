"""Seeded synthetic tract datasets.

``synthetic_metro`` builds a panel: each tract keeps its size, density and
a latent poverty score across years, and a per-year schedule sets how
widely city and suburban rates spread around their medians. Identical
schedule entries therefore give identical years.

``reference_fixture`` builds a dataset whose suburban tract counts and
populations above the city 50th/75th percentile match a fixed table of
reference rows.
"""

from __future__ import annotations

import math
import random
import zlib
from dataclasses import dataclass

from .ingest import CITY, NONCITY, UNASSIGNED, PlaceBoundary, TractRecord

DEFAULT_YEARS = (2000, 2010, 2015)

# (city median, city spread, suburban median, suburban spread) on the logit scale
RUST_BELT = (0.30, 0.8, 0.08, 1.4)

CONVERGENCE_SCHEDULES = {
    # city spread rises while suburban spread falls
    "converging": ((0.50, 1.5), (0.62, 1.2), (0.75, 0.9)),
    "diverging": ((0.75, 0.9), (0.62, 1.2), (0.50, 1.5)),
    "static": ((0.62, 1.2), (0.62, 1.2), (0.62, 1.2)),
}

CITY_HALF_WIDTH = 0.1
SUBURB_RADIUS = (0.15, 0.6)


def _sigmoid(v: float) -> float:
    return 1.0 / (1.0 + math.exp(-v))


def _logit(p: float) -> float:
    return math.log(p / (1.0 - p))


def _clip(v: float, lo: float = 0.0, hi: float = 100.0) -> float:
    return round(min(max(v, lo), hi), 1)


def city_square(msa: str, center: tuple[float, float] = (0.0, 0.0)) -> PlaceBoundary:
    cx, cy = center
    h = CITY_HALF_WIDTH
    ring = ((cx - h, cy - h), (cx + h, cy - h), (cx + h, cy + h), (cx - h, cy + h), (cx - h, cy - h))
    return PlaceBoundary(msa, ((ring,),))


@dataclass(frozen=True)
class _Latent:
    z: float
    universe: int
    density_noise: float
    lon: float
    lat: float
    noise: tuple[float, ...]


def _latents(rng: random.Random, n: int, n_city: int, center: tuple[float, float]) -> list[_Latent]:
    out = []
    cx, cy = center
    for i in range(n):
        z = rng.gauss(0.0, 1.0)
        universe = rng.randint(1200, 6000)
        dnoise = rng.gauss(0.0, 0.5)
        if i < n_city:
            lon = cx + rng.uniform(-0.95, 0.95) * CITY_HALF_WIDTH
            lat = cy + rng.uniform(-0.95, 0.95) * CITY_HALF_WIDTH
        else:
            r = rng.uniform(*SUBURB_RADIUS)
            theta = rng.uniform(0.0, 2.0 * math.pi)
            lon, lat = cx + r * math.cos(theta), cy + r * math.sin(theta)
        noise = tuple(rng.gauss(0.0, 1.0) for _ in range(5))
        out.append(_Latent(z, universe, dnoise, lon, lat, noise))
    return out


def _extras(rate: float, city: bool, noise: tuple[float, ...]) -> dict[str, float]:
    return {
        "pct_renter": _clip(20 + 110 * rate + 6 * noise[0] + (10 if city else 0)),
        "pct_vacant": _clip(3 + 35 * rate + 2 * noise[1]),
        "pct_second_mortgage": _clip(7 - 6 * rate + 1.5 * noise[2]),
        "pct_no_hs": _clip(4 + 45 * rate + 3 * noise[3]),
        "pct_white": _clip((70 if city else 92) - 120 * rate + 6 * noise[4]),
    }


def synthetic_metro(
    seed: int,
    msa: str = "RUST",
    n_tracts: int = 800,
    years: tuple[int, ...] = (2015,),
    schedule: tuple[tuple[float, float], ...] | None = None,
    city_share: float = 0.3,
    medians: tuple[float, float] = (RUST_BELT[0], RUST_BELT[2]),
    center: tuple[float, float] = (0.0, 0.0),
    preset_scope: bool = True,
) -> list[TractRecord]:
    """A Rust-Belt-style metro: poor, evenly poor city and a richer, uneven suburb.

    ``schedule`` gives (city spread, suburban spread) per year; the default
    uses the same spreads every year. With ``preset_scope=False`` every
    record is unassigned and membership must come from the city polygon
    (see ``city_square``).
    """
    if schedule is None:
        schedule = ((RUST_BELT[1], RUST_BELT[3]),) * len(years)
    if len(schedule) != len(years):
        raise ValueError("schedule needs one (city, suburb) spread pair per year")
    rng = random.Random(seed)
    n_city = round(n_tracts * city_share)
    latents = _latents(rng, n_tracts, n_city, center)
    city_median, suburb_median = medians

    records = []
    for year, (city_spread, suburb_spread) in zip(years, schedule):
        for i, lt in enumerate(latents):
            city = i < n_city
            if city:
                rate = _sigmoid(_logit(city_median) + city_spread * lt.z)
            else:
                rate = _sigmoid(_logit(suburb_median) + suburb_spread * lt.z)
            poor = round(rate * lt.universe)
            density = (3000.0 if city else 600.0) * math.exp(lt.density_noise) * (1.0 + 3.0 * rate)
            area = round(lt.universe / density, 6)
            scope = (CITY if city else NONCITY) if preset_scope else UNASSIGNED
            records.append(
                TractRecord(
                    tract_id=f"{msa}{i:05d}",
                    msa=msa,
                    year=year,
                    poor=poor,
                    universe=lt.universe,
                    land_area=area,
                    centroid_lon=round(lt.lon, 6),
                    centroid_lat=round(lt.lat, 6),
                    scope=scope,
                    extras=_extras(poor / lt.universe, city, lt.noise),
                )
            )
    return records


def convergence_fixture(seed: int, kind: str = "converging", msa: str = "CONV", n_tracts: int = 800) -> list[TractRecord]:
    return synthetic_metro(seed, msa, n_tracts, DEFAULT_YEARS, CONVERGENCE_SCHEDULES[kind])


# --------------------------------------------------------------------------
# reference-table fixture


@dataclass(frozen=True)
class MetroSpec:
    msa: str
    city_tracts: int
    city_pop: int
    msa_pop: int
    # year -> (noncity tracts, above p50, above p75, pop above p50, pop above p75)
    years: dict[int, tuple[int, int, int, int, int]]


# City and metro populations from the city population table; suburban rows
# from the high-poverty suburban tract table.
REFERENCE_METROS = (
    MetroSpec("BFLO", 77, 259517, 1135734, {
        2000: (211, 11, 6, 23106, 11269),
        2010: (213, 11, 6, 25902, 15461),
        2015: (216, 27, 14, 79255, 40960),
    }),
    MetroSpec("CLE", 177, 390584, 2064483, {
        2000: (469, 13, 0, 31913, 0),
        2010: (456, 25, 12, 55765, 27295),
        2015: (456, 44, 18, 111746, 41331),
    }),
    MetroSpec("DET", 297, 690074, 4296416, {
        2000: (970, 26, 13, 81680, 34301),
        2010: (989, 31, 16, 96772, 45733),
        2015: (991, 106, 41, 334636, 106783),
    }),
    MetroSpec("MKE", 211, 599498, 1570006, {
        2000: (190, 0, 0, 0, 0),
        2010: (217, 1, 0, 2739, 0),
        2015: (219, 15, 1, 46400, 2814),
    }),
    MetroSpec("AUS", 194, 887061, 1889094, {
        2000: (92, 31, 6, 155101, 31325),
        2010: (164, 40, 15, 173274, 53357),
        2015: (166, 49, 15, 268941, 69924),
    }),
    MetroSpec("CHI", 797, 2717534, 8826671, {
        2000: (1069, 65, 13, 189598, 24570),
        2010: (1276, 98, 27, 382468, 87630),
        2015: (1278, 138, 39, 571948, 129328),
    }),
    MetroSpec("COL", 218, 824663, 1972375, {
        2000: (218, 38, 4, 55099, 3668),
        2010: (242, 24, 3, 80782, 4760),
        2015: (241, 51, 15, 184373, 48895),
    }),
    MetroSpec("ORL", 52, 256738, 2277816, {
        2000: (222, 68, 30, 315409, 136631),
        2010: (340, 110, 37, 530873, 150443),
        2015: (340, 110, 44, 598179, 203758),
    }),
)

# Cells as printed, keyed (msa, year, percentile).
REFERENCE_CELLS = {
    ("BFLO", 2000, 50): "11/211 (5.2%)", ("BFLO", 2010, 50): "11/213 (5.2%)", ("BFLO", 2015, 50): "27/216 (12.5%)",
    ("BFLO", 2000, 75): "6/211 (2.8%)", ("BFLO", 2010, 75): "6/213 (2.8%)", ("BFLO", 2015, 75): "14/216 (6.5%)",
    ("CLE", 2000, 50): "13/469 (2.8%)", ("CLE", 2010, 50): "25/456 (5.5%)", ("CLE", 2015, 50): "44/456 (9.6%)",
    ("CLE", 2000, 75): "0/469 (0%)", ("CLE", 2010, 75): "12/456 (2.6%)", ("CLE", 2015, 75): "18/456 (3.9%)",
    ("DET", 2000, 50): "26/970 (2.7%)", ("DET", 2010, 50): "31/989 (3.1%)", ("DET", 2015, 50): "106/991 (10.7%)",
    ("DET", 2000, 75): "13/970 (1.3%)", ("DET", 2010, 75): "16/989 (1.6%)", ("DET", 2015, 75): "41/991 (4.1%)",
    ("MKE", 2000, 50): "0/190 (0%)", ("MKE", 2010, 50): "1/217 (0.5%)", ("MKE", 2015, 50): "15/219 (6.8%)",
    ("MKE", 2000, 75): "0/190 (0%)", ("MKE", 2010, 75): "0/217 (0%)", ("MKE", 2015, 75): "1/219 (0.5%)",
    ("AUS", 2000, 50): "31/92 (33.7%)", ("AUS", 2010, 50): "40/164 (24.4%)", ("AUS", 2015, 50): "49/166 (33.7%)",
    ("AUS", 2000, 75): "6/92 (6.5%)", ("AUS", 2010, 75): "15/164 (9.1%)", ("AUS", 2015, 75): "15/166 (6.5%)",
    ("CHI", 2000, 50): "65/1069 (6.1%)", ("CHI", 2010, 50): "98/1276 (7.7%)", ("CHI", 2015, 50): "138/1278 (6.1%)",
    ("CHI", 2000, 75): "13/1069 (1.2%)", ("CHI", 2010, 75): "27/1276 (2.1%)", ("CHI", 2015, 75): "39/1278 (1.2%)",
    ("COL", 2000, 50): "38/218 (17.4%)", ("COL", 2010, 50): "24/242 (9.9%)", ("COL", 2015, 50): "51/241 (17.4%)",
    ("COL", 2000, 75): "4/216 (1.9%)", ("COL", 2010, 75): "3/242 (1.2%)", ("COL", 2015, 75): "15/241 (1.9%)",
    ("ORL", 2000, 50): "68/222 (30.6%)", ("ORL", 2010, 50): "110/340 (32.4%)", ("ORL", 2015, 50): "110/340 (30.6%)",
    ("ORL", 2000, 75): "30/222 (13.5%)", ("ORL", 2010, 75): "37/340 (10.9%)", ("ORL", 2015, 75): "44/340 (13.5%)",
}

RUST_BELT_MSAS = ("BFLO", "CLE", "DET", "MKE")
COMPARISON_MSAS = ("AUS", "CHI", "COL", "ORL")

# City rates are spread evenly over this range; the p50/p75 of the
# realized rates then fall near 0.325 and 0.46.
_CITY_RATE_RANGE = (0.05, 0.60)
_MARGIN = 0.01


def _split(total: int, k: int, rng: random.Random) -> list[int]:
    """Split ``total`` into ``k`` positive-ish integers with mild variation."""
    if k == 0:
        if total:
            raise ValueError("cannot place population in zero tracts")
        return []
    weights = [rng.uniform(0.7, 1.3) for _ in range(k)]
    scale = total / sum(weights)
    parts = [int(w * scale) for w in weights]
    for j in range(total - sum(parts)):
        parts[j % k] += 1
    return parts


def _tract(msa, tract_id, year, rate, universe, scope, rng, lon, lat) -> TractRecord:
    poor = min(universe, max(0, round(rate * universe)))
    density = (3000.0 if scope == CITY else 600.0) * rng.uniform(0.6, 1.6)
    noise = tuple(rng.gauss(0.0, 1.0) for _ in range(5))
    return TractRecord(
        tract_id, msa, year, poor, universe,
        round(universe / density, 6), round(lon, 6), round(lat, 6), scope,
        _extras(poor / universe, scope == CITY, noise),
    )


def _metro_year(spec: MetroSpec, year: int) -> list[TractRecord]:
    from .distribution import quantile

    rng = random.Random(zlib.crc32(f"{spec.msa}:{year}".encode()))
    n_nc, c50, c75, pop50, pop75 = spec.years[year]

    lo, hi = _CITY_RATE_RANGE
    n_c = spec.city_tracts
    city_rates = [lo + (hi - lo) * j / (n_c - 1) for j in range(n_c)]
    city_pops = _split(spec.city_pop, n_c, rng)
    records = [
        _tract(spec.msa, f"{spec.msa}C{j:04d}", year, r, u, CITY, rng, rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1))
        for j, (r, u) in enumerate(zip(city_rates, city_pops))
    ]
    realized = [t.rate for t in records]
    p50, p75 = quantile(realized, 0.5), quantile(realized, 0.75)

    n_low = n_nc - c50
    suburban = (
        [(rng.uniform(p75 + 0.02, 0.70), u) for u in _split(pop75, c75, rng)]
        + [(rng.uniform(p50 + 0.02, p75 - 0.02), u) for u in _split(pop50 - pop75, c50 - c75, rng)]
        + [(rng.uniform(0.01, p50 - 0.05), u) for u in _split(spec.msa_pop - spec.city_pop - pop50, n_low, rng)]
    )
    rng.shuffle(suburban)
    for j, (r, u) in enumerate(suburban):
        theta = rng.uniform(0.0, 2.0 * math.pi)
        rad = rng.uniform(*SUBURB_RADIUS)
        records.append(
            _tract(spec.msa, f"{spec.msa}N{j:04d}", year, r, u, NONCITY, rng, rad * math.cos(theta), rad * math.sin(theta))
        )
    # integer rounding of poor counts must not move a tract across a threshold
    for t in records[n_c:]:
        if abs(t.rate - p50) < _MARGIN / 2 or abs(t.rate - p75) < _MARGIN / 2:
            raise RuntimeError(f"fixture tract {t.tract_id} too close to a threshold")
    return records


def reference_fixture(msas: tuple[str, ...] | None = None) -> list[TractRecord]:
    records = []
    for spec in REFERENCE_METROS:
        if msas is not None and spec.msa not in msas:
            continue
        for year in sorted(spec.years):
            records.extend(_metro_year(spec, year))
    return records


def reference_config() -> dict:
    """Run configuration matching the fixture: median threshold for MKE."""
    return {
        "high_poverty_percentile": {"MKE": 50},
        "reference_cells": [
            {"msa": m, "year": y, "percentile": p, "cell": cell}
            for (m, y, p), cell in sorted(REFERENCE_CELLS.items())
        ],
    }
