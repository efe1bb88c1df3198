"""Acceptance criteria, one test each; results are echoed in the terminal summary."""

import math
import random
import time


from povconc import fixtures
from povconc.analysis import CONVERGING, DIVERGING, FLAT, classify_suburban, convergence_verdict, series_from_scores
from povconc.cli import main
from povconc.config import config_from_dict
from povconc.distribution import quantile
from povconc.indices import AREA, POPULATION, aco, exposure, gini, isolation, score_all
from povconc.ingest import CITY, METRO, NONCITY, build_snapshot, group_records
from povconc.report import build_bundle, format_classification_cell

from . import oracles
from .conftest import ACCEPTANCE_RESULTS, records_from, snapshot_from


def record(name, failures, detail=""):
    ok = not failures
    ACCEPTANCE_RESULTS.append((name, ok, detail if ok else "; ".join(failures[:5])))
    assert ok, failures


def near(got, want, tol):
    return got is not None and abs(got - want) <= tol


def test_01_hand_values():
    three = snapshot_from([(100, 10), (100, 20), (100, 30)])
    aco_tracts = snapshot_from([(100, 50, 1.0), (120, 30, 2.0), (80, 20, 7.0)])
    checks = {
        "IS": (isolation(three), 0.2083333333333333),
        "xPx": (exposure(three), 0.2333333333333333),
        "Gini top quintile": (gini(snapshot_from([(100, 0)] * 4 + [(100, 50)])), 0.8),
        # quintile poor 2,2,2,10,10 of 26 give cumulative sums 2+6+10+22+42 = 82 over 26*5
        "Gini fractional": (gini(snapshot_from([(60, 6), (40, 20)])), 1 - 82 / 130),
        "ACO population": (aco(aco_tracts, POPULATION), 0.30),
        "ACO area": (aco(aco_tracts, AREA), 0.50),
    }
    failures = [f"{k}={got} want {want}" for k, (got, want) in checks.items() if not near(got, want, 1e-9)]
    # the printed four-digit value for the fractional case
    if not near(checks["Gini fractional"][0], 0.3692, 5e-5):
        failures.append("Gini fractional does not round to 0.3692")
    record("1 hand-computed values", failures, "IS, xPx, 2x Gini, 2x ACO within 1e-9")


def test_02_degenerate_suite():
    failures = []
    rng = random.Random(2)
    for trial in range(50):
        num, den = rng.randint(1, 9), rng.randint(10, 40)
        rows = [(den * m, num * m, rng.uniform(0.1, 100)) for m in (rng.randint(1, 50) for _ in range(rng.randint(2, 30)))]
        s = snapshot_from(rows)
        sc = score_all(s)
        if not (near(sc.gini, 0, 1e-12) and near(sc.isolation, 0, 1e-12) and near(sc.exposure, s.X / s.T, 1e-12)):
            failures.append(f"uniform trial {trial}: {sc}")
        # ACO is undefined once tracts are identical in size, poverty and area
        same = snapshot_from([(den * 10, num * 10, 3.5)] * rng.randint(2, 20))
        sc = score_all(same)
        if sc.aco is not None or not near(sc.isolation, 0, 1e-12) or not near(sc.gini, 0, 1e-12):
            failures.append(f"identical trial {trial}: aco={sc.aco}")
        sep = [(rng.randint(1, 500), 0) for _ in range(rng.randint(1, 10))]
        sep += [(t, t) for t in (rng.randint(1, 500) for _ in range(rng.randint(1, 10)))]
        rng.shuffle(sep)
        if not near(isolation(snapshot_from(sep)), 1.0, 1e-12):
            failures.append(f"separation trial {trial}")
    record("2 degenerate suite", failures, "50 uniform, 50 identical-tract, 50 perfect-separation snapshots")


def test_03_oracle_equivalence():
    start = time.perf_counter()
    failures = []
    for seed in range(200):
        rng = random.Random(1000 + seed)
        tracts = oracles.random_tracts(rng, rng.randint(2, 50))
        s = snapshot_from(tracts)
        pairs = [
            ("gini", gini(s), oracles.gini(tracts)),
            ("isolation", isolation(s), oracles.isolation(tracts)),
            ("exposure", exposure(s), oracles.exposure(tracts)),
            ("aco/population", aco(s, POPULATION), oracles.aco(tracts, POPULATION)),
            ("aco/area", aco(s, AREA), oracles.aco(tracts, AREA)),
        ]
        for name, got, want in pairs:
            if (got is None) != (want is None):
                failures.append(f"seed {seed} {name}: {got} vs {want}")
            elif got is not None and not math.isclose(got, float(want), rel_tol=1e-12):
                failures.append(f"seed {seed} {name}: {got!r} vs {float(want)!r}")
    elapsed = time.perf_counter() - start
    if elapsed >= 10:
        failures.append(f"took {elapsed:.2f}s")
    record("3 oracle equivalence", failures, f"200 snapshots x 5 indices in {elapsed:.2f}s")


def test_04_property_suite():
    failures = []
    for seed in range(1000):
        rng = random.Random(50_000 + seed)
        tracts = oracles.random_tracts(rng, rng.randint(2, 50))
        s = snapshot_from(tracts)
        sc = score_all(s)
        if sc.exposure < s.X / s.T:
            failures.append(f"seed {seed}: xPx {sc.exposure} < X/T {s.X / s.T}")
        for name in ("gini", "isolation"):
            if not 0.0 <= getattr(sc, name) <= 1.0:
                failures.append(f"seed {seed}: {name} {getattr(sc, name)} outside [0, 1]")
        shuffled = list(tracts)
        rng.shuffle(shuffled)
        if score_all(snapshot_from(shuffled)) != sc:
            failures.append(f"seed {seed}: permutation changed scores")
        k = rng.randint(2, 1000)
        scaled = score_all(snapshot_from([(i, t * k, x * k, a) for i, t, x, a in tracts]))
        for name in ("gini", "isolation", "exposure", "aco"):
            a, b = getattr(sc, name), getattr(scaled, name)
            if (a is None) != (b is None) or (a is not None and not math.isclose(a, b, rel_tol=1e-12, abs_tol=1e-12)):
                failures.append(f"seed {seed}: {name} not scale invariant ({a} vs {b})")
        recs = records_from(tracts, scope=NONCITY)
        noncity, metro = build_snapshot(recs, "M", 2015, NONCITY), build_snapshot(recs, "M", 2015, METRO)
        counts = [classify_suburban(noncity, metro, th, 75).count_exceeding for th in sorted(rng.random() for _ in range(8))]
        if counts != sorted(counts, reverse=True):
            failures.append(f"seed {seed}: classification not monotone {counts}")
    record("4 property suite", failures, "1000 snapshots: bounds, permutation, scale, monotone classification")


def test_05_reference_table_reproduction():
    records = fixtures.reference_fixture()
    bundle = build_bundle(records, config_from_dict(fixtures.reference_config()), parts=("classifications",))
    cells = {(r.msa, r.year, r.percentile_used): format_classification_cell(r) for r in bundle.classifications}
    expected = {
        ("BFLO", 2015, 50): "27/216 (12.5%)",
        ("BFLO", 2015, 75): "14/216 (6.5%)",
        ("CLE", 2015, 50): "44/456 (9.6%)",
        ("CLE", 2015, 75): "18/456 (3.9%)",
        ("DET", 2015, 50): "106/991 (10.7%)",
        ("DET", 2015, 75): "41/991 (4.1%)",
        ("MKE", 2015, 50): "15/219 (6.8%)",
        ("MKE", 2015, 75): "1/219 (0.5%)",
    }
    failures = [f"{k}: {cells.get(k)} want {v}" for k, v in expected.items() if cells.get(k) != v]
    if cells.get(("AUS", 2015, 50)) != "49/166 (29.5%)":
        failures.append(f"AUS 2015 50%: {cells.get(('AUS', 2015, 50))}")
    notes = bundle.provenance["notes"]
    if not any("49/166 (29.5%)" in n and "49/166 (33.7%)" in n for n in notes):
        failures.append("no provenance note for the AUS 2015 deviation")
    # every comparison-city 2015 cell is recomputed from its counts
    for msa in fixtures.COMPARISON_MSAS:
        for pct in (50, 75):
            row = next(r for r in bundle.classifications if (r.msa, r.year, r.percentile_used) == (msa, 2015, pct))
            printed = fixtures.REFERENCE_CELLS[(msa, 2015, pct)]
            if printed.split(" ")[0] != f"{row.count_exceeding}/{row.count_total}":
                failures.append(f"{msa} 2015 {pct}%: counts {row.count_exceeding}/{row.count_total} vs {printed}")
            pct_text = f"{round(1000 * row.count_exceeding / row.count_total) / 10:.1f}%"
            if pct_text not in cells[(msa, 2015, pct)]:
                failures.append(f"{msa} 2015 {pct}%: {cells[(msa, 2015, pct)]} not recomputed")
    record("5 reference table reproduction", failures, "8 Rust Belt 2015 cells exact; 49/166 -> 29.5% noted")


def test_06_magnitude_band():
    failures = []
    values = []
    for seed in range(10):
        recs = fixtures.synthetic_metro(seed, n_tracts=800)
        m = gini(build_snapshot(recs, "RUST", 2015, METRO))
        c = gini(build_snapshot(recs, "RUST", 2015, CITY))
        values.append((m, c))
        if not 0.4 <= m <= 0.6:
            failures.append(f"seed {seed}: metro Gini {m:.3f}")
        if not 0.2 <= c <= 0.35:
            failures.append(f"seed {seed}: city Gini {c:.3f}")
    m0, c0 = values[0]
    record("6 magnitude band", failures, f"10 seeds; seed 0 metro {m0:.3f}, city {c0:.3f}")


def _convergence(seed, kind):
    scores = [
        score_all(build_snapshot(recs, msa, year, scope))
        for (msa, year), recs in group_records(fixtures.convergence_fixture(seed, kind)).items()
        for scope in (CITY, NONCITY)
    ]
    return convergence_verdict(series_from_scores(scores)["CONV"], msa="CONV")


def test_07_convergence_detection():
    failures = []
    for seed in range(3):
        conv = _convergence(seed, "converging")
        div = _convergence(seed, "diverging")
        flat = _convergence(seed, "static")
        n_conv = sum(v == CONVERGING for v in conv.verdicts.values())
        n_div = sum(v == DIVERGING for v in div.verdicts.values())
        if n_conv < 3 or conv.aggregate != CONVERGING:
            failures.append(f"seed {seed}: converging fixture {conv.verdicts}")
        if n_div < 3 or div.aggregate != DIVERGING:
            failures.append(f"seed {seed}: mirrored fixture {div.verdicts}")
        if flat.aggregate != FLAT or set(flat.verdicts.values()) != {FLAT}:
            failures.append(f"seed {seed}: static fixture {flat.verdicts}")
        if _convergence(seed, "converging") != conv:
            failures.append(f"seed {seed}: not deterministic")
    record("7 convergence detection", failures, "3 seeds: converging / diverging / flat")


def test_08_quantile_contract():
    failures = []
    if quantile([1, 2, 3, 4], 0.25) != 1.75:
        failures.append(f"quantile([1,2,3,4], .25) = {quantile([1, 2, 3, 4], 0.25)}")
    rng = random.Random(8)
    levels = [i / 200 for i in range(201)]
    for trial in range(100):
        values = [rng.random() for _ in range(rng.randint(1, 60))]
        if quantile(values, 0) != min(values) or quantile(values, 1) != max(values):
            failures.append(f"array {trial}: ends")
        qs = [quantile(values, q) for q in levels]
        if any(b < a for a, b in zip(qs, qs[1:])):
            failures.append(f"array {trial}: not monotone")
    record("8 quantile contract", failures, "1.75 example; ends exact and monotone on 100 arrays")


def test_09_end_to_end(tmp_path, capsys):
    data = tmp_path / "data"
    main(["fixture", "--seed", "1", "--n-tracts", "5000", "--out", str(data)])
    failures = []
    outputs = []
    times = []
    for run in ("a", "b"):
        out = tmp_path / run
        start = time.perf_counter()
        code = main(["report", "--config", str(data / "config.json"), "--out", str(out), "--format", "csv"])
        times.append(time.perf_counter() - start)
        if code != 0:
            failures.append(f"run {run} exit {code}")
        outputs.append({p.relative_to(out): p.read_bytes() for p in sorted(out.rglob("*")) if p.is_file()})
    capsys.readouterr()
    if outputs[0] != outputs[1]:
        failures.append("outputs differ between runs")
    if max(times) >= 5:
        failures.append(f"slowest run {max(times):.2f}s")
    n_rows = outputs[0][next(k for k in outputs[0] if k.name == "buckets.csv")].count(b"\n") - 1
    if n_rows != 15000:
        failures.append(f"{n_rows} bucket rows, want 15000")
    record(
        "9 end-to-end determinism and speed",
        failures,
        f"5000 tracts x 3 years, {len(outputs[0])} files, runs {times[0]:.2f}s / {times[1]:.2f}s",
    )
