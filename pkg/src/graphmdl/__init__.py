"""Consensus graphs from multiple noisy graph samples by minimum description length."""

__version__ = "0.1.0"

from .aggregate import AggregationConfig, MDLGraphAggregator, aggregate  # noqa: E402
from .graph import Edge, Graph, Node, is_dag  # noqa: E402
from .io import SampleSet, parse_script, read_graph, read_samples, write_graph  # noqa: E402
from .metrics import evaluate  # noqa: E402
from .pool import build_pool  # noqa: E402
from .solver import WeightedSelectionProblem, brute_force, solve  # noqa: E402
from .synth import NoiseModel, corrupt, generate_truth  # noqa: E402
from .tuning import LambdaTuner, tune  # noqa: E402

__all__ = [
    "AggregationConfig", "Edge", "Graph", "LambdaTuner", "MDLGraphAggregator", "Node",
    "NoiseModel", "SampleSet", "WeightedSelectionProblem", "aggregate", "brute_force",
    "build_pool", "corrupt", "evaluate", "generate_truth", "is_dag", "parse_script",
    "read_graph", "read_samples", "solve", "tune", "write_graph",
]
