"""Finsler curvature tower, first integrals and geodesic flow."""

from ._core import (
    F2,
    ConfigError,
    DomainError,
    FinslerError,
    HomogeneityError,
    MetricSpec,
    SingularMetricError,
    UnknownFieldError,
    bracket,
    closed_forms,
    euclidean_metric,
    evaluate,
    field_ids,
    first_integrals,
    integrate,
    load_metric,
    packet,
    parse_metric,
    run_cli,
    sample_points,
)

__all__ = [
    "F2",
    "ConfigError",
    "DomainError",
    "FinslerError",
    "HomogeneityError",
    "MetricSpec",
    "SingularMetricError",
    "UnknownFieldError",
    "bracket",
    "closed_forms",
    "euclidean_metric",
    "evaluate",
    "field_ids",
    "first_integrals",
    "integrate",
    "load_metric",
    "packet",
    "parse_metric",
    "run_cli",
    "sample_points",
]
