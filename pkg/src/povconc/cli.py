"""Command-line entry point: ``povconc <subcommand> [options]``.

Exit codes: 0 success, 1 data error, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from collections import Counter

from . import fixtures
from .config import Config, config_from_dict, load_config
from .errors import ConfigError, DataError
from .ingest import (
    CITY,
    NONCITY,
    UNASSIGNED,
    TractRecord,
    assign_membership,
    format_tract_table,
    parse_overrides,
    parse_place_polygons,
    parse_tract_table,
)
from .report import build_bundle, bundle_json, emit_report_bundle, file_digest

EXIT_OK, EXIT_DATA, EXIT_USAGE = 0, 1, 2

SUBCOMMAND_PARTS = {
    "scores": ("scores",),
    "distributions": ("curves", "summaries", "buckets"),
    "classify": ("classifications",),
    "groups": ("group_means",),
    "converge": ("convergence",),
}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _resolve_config(args) -> Config:
    cfg = load_config(args.config) if args.config else Config()
    for name in ("tracts", "places", "overrides"):
        value = getattr(args, name, None)
        if value:
            setattr(cfg, name, value)
    return cfg


def load_records(cfg: Config) -> tuple[list[TractRecord], dict[str, str]]:
    """Parse the configured inputs and assign core-city membership."""
    if not cfg.tracts:
        raise ConfigError("no tract table given (use --tracts or the config 'tracts' key)")
    inputs = {}
    try:
        records = parse_tract_table(_read(cfg.tracts), source=cfg.tracts)
        inputs[cfg.tracts] = file_digest(cfg.tracts)
        places = []
        if cfg.places:
            places = parse_place_polygons(_read(cfg.places), source=cfg.places)
            inputs[cfg.places] = file_digest(cfg.places)
        overrides = {}
        if cfg.overrides:
            overrides = parse_overrides(_read(cfg.overrides), source=cfg.overrides)
            inputs[cfg.overrides] = file_digest(cfg.overrides)
    except OSError as exc:
        raise DataError(f"cannot read input: {exc.strerror}", source=exc.filename) from None

    if not places and not overrides:
        return records, inputs

    by_name = {p.place_name: p for p in places}
    msas = sorted({r.msa for r in records})
    out = []
    for msa in msas:
        subset = [r for r in records if r.msa == msa]
        name = cfg.place_names.get(msa, msa)
        place = by_name.get(name)
        if place is None and len(places) == 1 and len(msas) == 1:
            place = places[0]
        if place is None and msa in cfg.place_names:
            raise ConfigError(f"place {name!r} for {msa} not found in {cfg.places}")
        ids = {r.tract_id for r in subset}
        mine = {k: v for k, v in overrides.items() if k in ids}
        out.extend(assign_membership(subset, place, mine))
    stray = set(overrides) - {r.tract_id for r in records}
    if stray:
        raise DataError(f"override references unknown tract_id {sorted(stray)[0]!r}", source=cfg.overrides)
    order = {r.key: i for i, r in enumerate(records)}
    out.sort(key=lambda r: order[r.key])
    return out, inputs


def _emit(bundle, args) -> None:
    if args.out:
        for path in emit_report_bundle(bundle, args.out, args.format, figures=args.command == "report"):
            print(path)
    else:
        if args.format != "json":
            raise ConfigError("--format csv requires --out")
        sys.stdout.write(bundle_json(bundle))


def cmd_validate(args) -> int:
    cfg = _resolve_config(args)
    records, _ = load_records(cfg)
    counts = Counter((r.msa, r.year, r.scope) for r in records)
    for msa, year in sorted({(r.msa, r.year) for r in records}):
        c, n, u = (counts[(msa, year, s)] for s in (CITY, NONCITY, UNASSIGNED))
        print(f"{msa} {year}: {c + n + u} tracts ({c} city, {n} noncity, {u} unassigned)")
    print(f"ok: {len(records)} records")
    return EXIT_OK


def cmd_analysis(args) -> int:
    cfg = _resolve_config(args)
    records, inputs = load_records(cfg)
    parts = SUBCOMMAND_PARTS.get(args.command)
    bundle = build_bundle(records, cfg, parts, inputs) if parts else build_bundle(records, cfg, inputs=inputs)
    _emit(bundle, args)
    return EXIT_OK


def cmd_fixture(args) -> int:
    if not args.out:
        raise ConfigError("fixture needs --out")
    os.makedirs(args.out, exist_ok=True)
    files = {}
    config = {}
    if args.kind == "reference":
        records = fixtures.reference_fixture()
        config = fixtures.reference_config()
    elif args.kind in fixtures.CONVERGENCE_SCHEDULES:
        records = fixtures.convergence_fixture(args.seed, args.kind, n_tracts=args.n_tracts)
    else:
        years = tuple(args.years)
        records = fixtures.synthetic_metro(
            args.seed, args.msa, args.n_tracts, years, preset_scope=False
        )
        place = fixtures.city_square(args.msa)
        files["places.geojson"] = json.dumps(
            {
                "type": "FeatureCollection",
                "features": [
                    {
                        "type": "Feature",
                        "properties": {"name": place.place_name},
                        "geometry": {"type": "Polygon", "coordinates": [[list(p) for p in place.rings[0][0]]]},
                    }
                ],
            },
            indent=1,
        ) + "\n"
        config["places"] = os.path.join(args.out, "places.geojson")
    files["tracts.csv"] = format_tract_table(records)
    config["tracts"] = os.path.join(args.out, "tracts.csv")
    config_from_dict(config)
    files["config.json"] = json.dumps(config, indent=2, sort_keys=True) + "\n"
    for name in sorted(files):
        path = os.path.join(args.out, name)
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(files[name])
        print(path)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tracts", help="tract table CSV")
    common.add_argument("--places", help="place boundaries GeoJSON")
    common.add_argument("--overrides", help="CSV of tract_id,scope membership overrides")
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--out", help="output directory (default: JSON to stdout)")
    common.add_argument("--format", choices=("json", "csv"), default="json")

    parser = _Parser(prog="povconc", description="Core-city and suburban poverty concentration measures.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    helps = {
        "validate": "parse inputs and check invariants",
        "scores": "Gini, isolation, exposure and absolute concentration per snapshot",
        "distributions": "sorted rate curves, quartiles and quartile classes",
        "classify": "suburban tracts above the city 50th/75th percentile",
        "groups": "group means of socioeconomic variables",
        "converge": "city/suburb gap trajectories and verdicts",
        "report": "full bundle with figures",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, parents=[common], help=text)
        p.set_defaults(func=cmd_validate if name == "validate" else cmd_analysis)

    p = sub.add_parser("fixture", parents=[common], help="write a seeded synthetic dataset")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument(
        "--kind",
        choices=("rustbelt", "reference") + tuple(fixtures.CONVERGENCE_SCHEDULES),
        default="rustbelt",
    )
    p.add_argument("--n-tracts", type=int, default=800)
    p.add_argument("--years", type=int, nargs="+", default=list(fixtures.DEFAULT_YEARS))
    p.add_argument("--msa", default="RUST")
    p.set_defaults(func=cmd_fixture)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if not 0 <= getattr(args, "seed", 0) < 2**64:
        parser.error("--seed must be an unsigned 64-bit integer")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"povconc: usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except DataError as exc:
        print(f"povconc: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"povconc: I/O error: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
