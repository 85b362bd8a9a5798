"""Input validation helpers shared by the estimators and the CLI."""

from __future__ import annotations

import math
from numbers import Real

from .exceptions import ConfigError, DataError
from .graph import Graph
from .io import SampleSet


def check_lambda(value, name="lambda") -> float:
    if isinstance(value, bool) or not isinstance(value, Real) or math.isnan(value):
        raise ConfigError(f"{name} must be a real number, got {value!r}")
    if not 0.0 <= value <= 1.0:
        raise ConfigError(f"{name} must lie in [0, 1], got {value}")
    return float(value)


def check_sample_set(s) -> SampleSet:
    """Coerce a SampleSet or a non-empty sequence of graphs to a SampleSet."""
    if isinstance(s, SampleSet):
        return s
    if isinstance(s, Graph):
        return SampleSet([s])
    try:
        graphs = list(s)
    except TypeError:
        raise DataError(f"expected a SampleSet or a list of graphs, got {type(s).__name__}") from None
    if not graphs or not all(isinstance(g, Graph) for g in graphs):
        raise DataError("expected a non-empty list of Graph objects")
    return SampleSet(graphs)


def check_sample_sets(X) -> list[SampleSet]:
    """Validate a batch of inputs (one sample set per instance)."""
    if isinstance(X, (SampleSet, Graph)):
        raise DataError("expected a sequence of sample sets; wrap a single one in a list")
    out = [check_sample_set(s) for s in X]
    if not out:
        raise DataError("empty batch")
    return out


def check_grid(grid) -> list[float]:
    values = sorted({check_lambda(v, "grid value") for v in grid})
    if not values:
        raise ConfigError("empty hyperparameter grid")
    return values
