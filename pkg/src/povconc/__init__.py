"""Spatial concentration of core-city and suburban poverty over census tracts."""

from .analysis import (
    ClassificationRow,
    ConvergenceReport,
    GroupMeans,
    classify_suburban,
    convergence_verdict,
    group_means,
    high_poverty_threshold,
)
from .distribution import (
    QuantileSummary,
    RateCurve,
    bucketize,
    quantile,
    quartile_summary,
    sorted_rate_curve,
)
from .errors import ConfigError, DataError, DegenerateError, PovconcError
from .indices import ScoreSet, aco, exposure, gini, isolation, lorenz_quintiles, score_all
from .ingest import (
    PlaceBoundary,
    Snapshot,
    TractRecord,
    assign_membership,
    build_snapshot,
    parse_place_polygons,
    parse_tract_table,
)
from .report import ReportBundle, build_bundle, emit_report_bundle, format_classification_cell, render_series_svg

__version__ = "0.1.0"
