"""Brute-force reference implementations, written without the package's index code.

Tracts are plain tuples ``(tract_id, universe, poor, area)``. Arithmetic is
exact (Fraction) and converted to float only at the end.
"""

from __future__ import annotations

import bisect
import itertools
import random
from fractions import Fraction


def _totals(tracts):
    return sum(t[2] for t in tracts), sum(t[1] for t in tracts)


def lorenz_overlap(tracts, groups=5):
    """Poor share per equal-population group from interval overlaps."""
    X, T = _totals(tracts)
    ordered = sorted(tracts, key=lambda t: Fraction(t[2], t[1]))
    spans = []
    start = 0
    for _, t, x, _ in ordered:
        spans.append((start, start + t, Fraction(x, t)))
        start += t
    poor = []
    for k in range(groups):
        lo, hi = Fraction(k * T, groups), Fraction((k + 1) * T, groups)
        got = Fraction(0)
        for a, b, rate in spans:
            overlap = min(hi, b) - max(lo, a)
            if overlap > 0:
                got += overlap * rate
        poor.append(got)
    cum = [Fraction(0)] + list(itertools.accumulate(poor))
    return [c / X for c in cum], poor


def gini(tracts):
    L, _ = lorenz_overlap(tracts)
    area = sum((L[k] + L[k - 1]) / 5 for k in range(1, 6))
    return float(1 - area)


def isolation(tracts):
    X, T = _totals(tracts)
    return float(sum(abs(Fraction(x, X) - Fraction(t - x, T - X)) for _, t, x, _ in tracts) / 2)


def exposure(tracts):
    X, _ = _totals(tracts)
    return float(sum(Fraction(x, X) * Fraction(x, t) for _, t, x, _ in tracts))


def aco(tracts, ordering="population"):
    X, _ = _totals(tracts)
    key_index = 1 if ordering == "population" else 3
    ordered = sorted(tracts, key=lambda t: (t[key_index], t[0]))
    pops = [t[1] for t in ordered]
    forward = list(itertools.accumulate(pops))
    n1 = bisect.bisect_left(forward, X) + 1
    T1 = forward[n1 - 1]
    backward = list(itertools.accumulate(reversed(pops)))
    m = bisect.bisect_left(backward, X) + 1
    n2 = len(ordered) - m + 1
    T2 = backward[m - 1]

    area = lambda t: Fraction(t[3])  # noqa: E731
    poor_area = sum(t[2] * area(t) for t in ordered) / X
    low = sum(t[1] * area(t) for t in ordered[:n1]) / T1
    high = sum(t[1] * area(t) for t in ordered[n2 - 1:]) / T2
    if high == low:
        return None
    return float(1 - (poor_area - low) / (high - low))


def winding_number(x, y, ring):
    """Non-zero winding number test for a closed ring."""
    wn = 0
    for (x1, y1), (x2, y2) in zip(ring, ring[1:]):
        cross = (x2 - x1) * (y - y1) - (x - x1) * (y2 - y1)
        if y1 <= y < y2 and cross > 0:
            wn += 1
        elif y2 <= y < y1 and cross < 0:
            wn -= 1
    return wn != 0


def random_tracts(rng: random.Random, n: int):
    """Random tracts with 0 < X < T; some sizes and areas repeat to force ties."""
    tracts = []
    for i in range(n):
        if rng.random() < 0.2:
            t = rng.choice((500, 1000, 2000))
        else:
            t = rng.randint(1, 5000)
        x = round(rng.random() * t)
        area = rng.choice((1.0, 5.0)) if rng.random() < 0.2 else 100.0 * (1.0 - rng.random())
        tracts.append((f"t{i:03d}", t, x, area))
    X, T = _totals(tracts)
    if X == 0:
        tid, t, _, a = tracts[0]
        tracts[0] = (tid, t, 1 if t > 1 else 0, a)
        if t == 1:
            tracts[0] = (tid, 2, 1, a)
    X, T = _totals(tracts)
    if X == T:
        tid, t, x, a = tracts[0]
        tracts[0] = (tid, t + 1, x, a)
    return tracts
