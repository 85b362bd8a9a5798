"""Leave-one-out grid search over (lambda1, lambda2)."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Optional, Sequence

from sklearn.base import BaseEstimator

from .aggregate import AggregationConfig, MDLGraphAggregator, aggregate_pool
from .exceptions import ConfigError
from .graph import Graph, edge_multiset_f1
from .io import SampleSet
from .metrics import HALF, component_f1, relation_f1
from .pool import build_pool
from .validation import check_grid, check_sample_set

DEFAULT_GRID = tuple(round(0.1 * k, 1) for k in range(11))

METRICS: dict[str, Callable[[Graph, Graph], float]] = {
    "edge_f1": edge_multiset_f1,
    "c_f1": lambda p, g: component_f1(p, g).f1,
    "r50_f1": lambda p, g: relation_f1(p, g, HALF),
}

# scores closer than this are treated as tied
TIE_TOL = 1e-12


@dataclass
class LabeledInstance:
    samples: SampleSet
    gold: Graph

    def __post_init__(self):
        self.samples = check_sample_set(self.samples)


@dataclass
class TuneResult:
    best_lambda1: float
    best_lambda2: float
    score_surface: dict[tuple[float, float], float] = field(default_factory=dict)
    folds: int = 0
    metric: str = "edge_f1"

    @property
    def best_score(self) -> float:
        return self.score_surface[(self.best_lambda1, self.best_lambda2)]

    def to_dict(self) -> dict:
        return {
            "best_lambda1": self.best_lambda1,
            "best_lambda2": self.best_lambda2,
            "best_score": self.best_score if self.score_surface else None,
            "folds": self.folds,
            "metric": self.metric,
            "surface": [
                {"lambda1": l1, "lambda2": l2, "score": s}
                for (l1, l2), s in sorted(self.score_surface.items())
            ],
        }


def parse_grid(text: str) -> list[float]:
    """``"0:1:0.1"`` (start:stop:step, inclusive) or ``"0.3,0.5,0.7"``."""
    try:
        if ":" in text:
            start, stop, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ConfigError("grid step must be positive")
            n = int(math.floor((stop - start) / step + 1e-9))
            return [round(start + k * step, 10) for k in range(n + 1)]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse grid {text!r}") from exc


def argmax_surface(surface: dict[tuple[float, float], float]) -> tuple[float, float]:
    """Best grid pair; ties go to the smaller lambda1, then the smaller lambda2."""
    if not surface:
        raise ConfigError("empty score surface")
    best_pair, best = None, -math.inf
    for pair in sorted(surface):
        if surface[pair] > best + TIE_TOL:
            best_pair, best = pair, surface[pair]
    return best_pair


def tune(
    instances: Sequence[LabeledInstance],
    grid: Sequence[float] = DEFAULT_GRID,
    metric: str = "edge_f1",
    cfg_base: Optional[AggregationConfig] = None,
) -> TuneResult:
    """Pick (lambda1, lambda2) maximising the mean held-out score.

    Each fold holds out one instance. The aggregation has no trainable
    state, so a fold's score is the metric of the held-out instance's
    consensus graph against its gold graph, and the surface value of a grid
    pair is the mean over folds.
    """
    if len(instances) < 2:
        raise ConfigError("tuning needs at least two labelled instances")
    if metric not in METRICS:
        raise ConfigError(f"unknown metric {metric!r}; choose from {sorted(METRICS)}")
    values = check_grid(grid)
    cfg_base = cfg_base or AggregationConfig()
    score_fn = METRICS[metric]
    pools = [build_pool(inst.samples, cfg_base.jaccard_threshold) for inst in instances]

    surface = {}
    for l1 in values:
        for l2 in values:
            cfg = replace(cfg_base, lambda1=l1, lambda2=l2)
            fold_scores = [score_fn(aggregate_pool(pool, cfg)[0], inst.gold)
                           for pool, inst in zip(pools, instances)]
            surface[(l1, l2)] = math.fsum(fold_scores) / len(fold_scores)
    b1, b2 = argmax_surface(surface)
    return TuneResult(b1, b2, surface, folds=len(instances), metric=metric)


def score_surface_csv(result: TuneResult, path) -> None:
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["lambda1", "lambda2", "score"])
        for (l1, l2), s in sorted(result.score_surface.items()):
            w.writerow([repr(l1), repr(l2), repr(s)])


class LambdaTuner(BaseEstimator):
    """Estimator that tunes the lambdas by leave-one-out on (X, y) and then
    aggregates with the winning pair.

    Parameters
    ----------
    grid : sequence of float
        Values tried for both lambdas.
    metric : {"edge_f1", "c_f1", "r50_f1"}
    variant, dag_constraints, jaccard_threshold, engine
        Passed through to :class:`MDLGraphAggregator`.
    """

    def __init__(self, grid=DEFAULT_GRID, metric="edge_f1", variant="full", dag_constraints=True,
                 jaccard_threshold=0.5, engine="lazy"):
        self.grid = grid
        self.metric = metric
        self.variant = variant
        self.dag_constraints = dag_constraints
        self.jaccard_threshold = jaccard_threshold
        self.engine = engine

    def fit(self, X, y):
        if len(X) != len(y):
            raise ConfigError("X and y have different lengths")
        cfg = AggregationConfig(variant=self.variant, dag_constraints=self.dag_constraints,
                                jaccard_threshold=self.jaccard_threshold, engine=self.engine)
        result = tune([LabeledInstance(s, g) for s, g in zip(X, y)], self.grid, self.metric, cfg)
        self.result_ = result
        self.best_lambda1_ = result.best_lambda1
        self.best_lambda2_ = result.best_lambda2
        self.score_surface_ = result.score_surface
        self.best_estimator_ = MDLGraphAggregator(
            lambda1=result.best_lambda1, lambda2=result.best_lambda2, variant=self.variant,
            dag_constraints=self.dag_constraints, jaccard_threshold=self.jaccard_threshold,
            engine=self.engine,
        ).fit()
        return self

    def predict(self, X) -> list[Graph]:
        if not hasattr(self, "best_estimator_"):
            from sklearn.exceptions import NotFittedError
            raise NotFittedError("LambdaTuner is not fitted yet")
        return self.best_estimator_.predict(X)
