"""Consensus graph by minimum expected description length.

Each pooled element with occurrence frequency ``p`` gets weight
``(1 - lambda) - p``; the consensus graph is the feasible selection of
minimum total weight. The constant part of the expected description
length does not depend on the hypothesis and is never computed.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from typing import Optional, Sequence

from sklearn.base import BaseEstimator

from .exceptions import ConfigError
from .graph import Edge, Graph, Node, edge_multiset_f1
from .io import SampleSet
from .pool import Pool, build_pool
from .solver import (
    Selection,
    WeightedSelectionProblem,
    objective_value,
    solve,
)
from .validation import check_lambda, check_sample_sets

FULL = "full"
NO_NODE_TRANSFORMS = "no_node_transforms"
EQUAL_LAMBDA = "equal_lambda"
NO_DAG = "no_dag"
VARIANTS = (FULL, NO_NODE_TRANSFORMS, EQUAL_LAMBDA, NO_DAG)


@dataclass(frozen=True)
class AggregationConfig:
    """Hyperparameters of one aggregation.

    ``lambda1`` prices an edge addition (a deletion costs ``1 - lambda1``),
    ``lambda2`` does the same for nodes. ``equal_lambda`` pins both to 0.5,
    ``no_node_transforms`` drops the node term and keeps every pooled node,
    ``no_dag`` lifts the acyclicity constraint.
    """

    lambda1: float = 0.7
    lambda2: float = 0.7
    variant: str = FULL
    dag_constraints: bool = True
    jaccard_threshold: float = 0.5
    seed: int = 0
    engine: str = "lazy"
    time_limit: Optional[float] = None

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ConfigError(f"unknown variant {self.variant!r}; choose from {VARIANTS}")
        check_lambda(self.lambda1, "lambda1")
        check_lambda(self.lambda2, "lambda2")
        check_lambda(self.jaccard_threshold, "jaccard_threshold")
        if self.engine not in ("lazy", "closure"):
            raise ConfigError(f"unknown engine {self.engine!r}")

    @property
    def effective_lambdas(self) -> tuple[float, float]:
        if self.variant == EQUAL_LAMBDA:
            return 0.5, 0.5
        return self.lambda1, self.lambda2

    @property
    def uses_node_term(self) -> bool:
        return self.variant != NO_NODE_TRANSFORMS

    @property
    def require_dag(self) -> bool:
        return self.dag_constraints and self.variant != NO_DAG

    def to_dict(self) -> dict:
        return asdict(self)


def build_problem(pool: Pool, cfg: AggregationConfig) -> WeightedSelectionProblem:
    """Weights ``(1 - lambda) - p`` for every observed pooled element.

    Unobserved pairs have ``p = 0`` and a non-negative weight, so they are
    left out. Without the node term there are no node weights and no
    couplings.
    """
    if pool.T < 1:
        raise ConfigError("pool must be built from at least one sample")
    lam1, lam2 = cfg.effective_lambdas
    edge_w = {(e.head, e.tail): (1.0 - lam1) - len(e.sample_ids) / pool.T for e in pool.edges}
    if not cfg.uses_node_term:
        return WeightedSelectionProblem({}, edge_w, [], cfg.require_dag)
    node_w = {n.id: (1.0 - lam2) - len(n.sample_ids) / pool.T for n in pool.nodes}
    couplings = [(pair, pair[0], pair[1]) for pair in edge_w]
    return WeightedSelectionProblem(node_w, edge_w, couplings, cfg.require_dag)


def materialize(pool: Pool, selection: Selection, cfg: AggregationConfig) -> Graph:
    """Turn a selection into a graph with representative content and types."""
    chosen_edges = sorted(selection.chosen_edges)
    if cfg.uses_node_term:
        keep = set(selection.chosen_nodes)
    else:
        # no node transformations: every pooled node is kept as observed
        keep = {pn.id for pn in pool.nodes}
    remap = {}
    nodes = []
    for pn in pool.nodes:
        if pn.id in keep:
            remap[pn.id] = len(nodes)
            nodes.append(Node(len(nodes), pn.representative_content, pn.representative_type,
                              pn.representative_span))
    index = pool.edge_index
    edges = [Edge(remap[h], remap[t], index[(h, t)].representative_type) for h, t in chosen_edges]
    meta = {
        "objective": selection.objective,
        "certificate": selection.certificate,
        "T": pool.T,
    }
    return Graph(nodes, edges, meta)


def aggregate_pool(pool: Pool, cfg: AggregationConfig) -> tuple[Graph, Selection]:
    problem = build_problem(pool, cfg)
    sel = solve(problem, cfg.engine, time_limit=cfg.time_limit)
    return materialize(pool, sel, cfg), sel


def aggregate(samples: SampleSet, cfg: Optional[AggregationConfig] = None) -> Graph:
    """Consensus graph of ``samples`` under ``cfg``.

    Raises
    ------
    SolverTimeoutError
        When ``cfg.time_limit`` runs out before optimality is proven.
    """
    cfg = cfg or AggregationConfig()
    pool = build_pool(samples, cfg.jaccard_threshold)
    return aggregate_pool(pool, cfg)[0]


class MDLGraphAggregator(BaseEstimator):
    """Estimator wrapper: ``predict`` maps sample sets to consensus graphs.

    The aggregation itself has no fitted state; ``fit`` only validates the
    hyperparameters. This keeps the estimator usable with scikit-learn
    model selection utilities (``GridSearchCV`` with ``LeaveOneOut``).

    Parameters
    ----------
    lambda1, lambda2 : float
        Bit cost of an edge / node addition, in [0, 1].
    variant : {"full", "no_node_transforms", "equal_lambda", "no_dag"}
    dag_constraints : bool
    jaccard_threshold : float
        Minimum token Jaccard similarity for merging two node contents.
    engine : {"lazy", "closure"}
    time_limit : float or None
        Seconds per branch-and-bound solve.
    """

    def __init__(self, lambda1=0.7, lambda2=0.7, variant=FULL, dag_constraints=True,
                 jaccard_threshold=0.5, engine="lazy", time_limit=None):
        self.lambda1 = lambda1
        self.lambda2 = lambda2
        self.variant = variant
        self.dag_constraints = dag_constraints
        self.jaccard_threshold = jaccard_threshold
        self.engine = engine
        self.time_limit = time_limit

    def _config(self) -> AggregationConfig:
        return AggregationConfig(
            lambda1=self.lambda1, lambda2=self.lambda2, variant=self.variant,
            dag_constraints=self.dag_constraints, jaccard_threshold=self.jaccard_threshold,
            engine=self.engine, time_limit=self.time_limit,
        )

    def fit(self, X=None, y=None):
        self.config_ = self._config()
        if X is not None:
            check_sample_sets(X)
        return self

    def predict(self, X) -> list[Graph]:
        cfg = getattr(self, "config_", None) or self._config()
        return [aggregate(s, cfg) for s in check_sample_sets(X)]

    def score(self, X, y: Sequence[Graph]) -> float:
        """Mean edge F1 of the predictions against gold graphs ``y``."""
        preds = self.predict(X)
        if len(preds) != len(y):
            raise ConfigError("X and y have different lengths")
        return sum(edge_multiset_f1(p, g) for p, g in zip(preds, y)) / len(preds)


def with_lambdas(cfg: AggregationConfig, lambda1: float, lambda2: float) -> AggregationConfig:
    return replace(cfg, lambda1=lambda1, lambda2=lambda2)


__all__ = [
    "AggregationConfig", "MDLGraphAggregator", "aggregate", "aggregate_pool", "build_problem",
    "materialize", "objective_value", "VARIANTS", "FULL", "NO_NODE_TRANSFORMS", "EQUAL_LAMBDA",
    "NO_DAG", "with_lambdas",
]
