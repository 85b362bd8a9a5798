"""Synthetic sweep: corrupt -> aggregate -> evaluate over variants, T and seeds."""

from __future__ import annotations

import csv
import math
import statistics
from collections import Counter, defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

from .aggregate import VARIANTS, AggregationConfig, aggregate
from .exceptions import ConfigError, GraphMDLError
from .graph import Graph, edge_multiset_f1, is_dag
from .metrics import error_counts, graph_edit_distance
from .synth import NoiseModel, corrupt, generate_truth

BASELINE = "greedy"


def node_recall(pred: Graph, gold: Graph) -> float:
    pc = Counter(n.key for n in pred.nodes)
    gc = Counter(n.key for n in gold.nodes)
    total = sum(gc.values())
    return sum((pc & gc).values()) / total if total else 1.0


def node_precision(pred: Graph, gold: Graph) -> float:
    return node_recall(gold, pred)


def _ged(pred, gold):
    big = max(len(pred.nodes), len(gold.nodes)) > 8
    return graph_edit_distance(pred, gold, "greedy" if big else "exact")


METRICS = {
    "edge_f1": edge_multiset_f1,
    "node_recall": node_recall,
    "node_precision": node_precision,
    "spurious_edges": lambda p, g: float(error_counts(p, g)["spurious_edges"]),
    "omitted_edges": lambda p, g: float(error_counts(p, g)["omitted_edges"]),
    "reversed_edges": lambda p, g: float(error_counts(p, g)["reversed_edges"]),
    "ged": _ged,
    "is_dag": lambda p, g: float(is_dag(p)),
}


@dataclass
class VariantSpec:
    name: str
    variant: str = "full"
    lambda1: float = 0.7
    lambda2: float = 0.7
    dag_constraints: bool = True

    def config(self, jaccard_threshold: float, engine: str) -> AggregationConfig:
        return AggregationConfig(self.lambda1, self.lambda2, self.variant, self.dag_constraints,
                                 jaccard_threshold, engine=engine)


@dataclass
class PipelineConfig:
    nodes: int = 8
    density: float = 0.35
    noise: NoiseModel = field(default_factory=NoiseModel)
    t_values: list[int] = field(default_factory=lambda: [1, 5, 10])
    seeds: list[int] = field(default_factory=lambda: list(range(10)))
    variants: list[VariantSpec] = field(default_factory=lambda: [VariantSpec(v, v) for v in VARIANTS])
    metrics: list[str] = field(default_factory=lambda: ["edge_f1", "node_recall"])
    jaccard_threshold: float = 0.5
    engine: str = "lazy"
    include_baseline: bool = True

    def __post_init__(self):
        bad = [m for m in self.metrics if m not in METRICS]
        if bad:
            raise ConfigError(f"unknown metrics {bad}; choose from {sorted(METRICS)}")
        if any(t < 1 for t in self.t_values):
            raise ConfigError("every T must be >= 1")
        names = [v.name for v in self.variants]
        if len(set(names)) != len(names) or BASELINE in names:
            raise ConfigError(f"variant names must be unique and differ from {BASELINE!r}")

    @classmethod
    def from_dict(cls, d: dict) -> "PipelineConfig":
        d = dict(d)
        try:
            if "noise" in d:
                d["noise"] = NoiseModel.from_dict(d["noise"])
            if "variants" in d:
                d["variants"] = [
                    VariantSpec(v, v) if isinstance(v, str) else VariantSpec(**v) for v in d["variants"]
                ]
            offset = d.pop("seed_offset", 0)
            if "n_seeds" in d:
                d["seeds"] = list(range(offset, offset + d.pop("n_seeds")))
            return cls(**d)
        except TypeError as exc:
            raise ConfigError(f"bad pipeline config: {exc}") from exc

    def to_dict(self) -> dict:
        return asdict(self)


def _run_seed(cfg: PipelineConfig, seed: int) -> list[dict]:
    rows = []
    try:
        truth = generate_truth(cfg.nodes, cfg.density, seed)
    except GraphMDLError as exc:
        raise type(exc)(f"[synth seed={seed}] {exc}") from exc
    noise = NoiseModel(**{**cfg.noise.to_dict(), "seed": seed})
    for T in cfg.t_values:
        samples = corrupt(truth, noise, T)
        preds = []
        if cfg.include_baseline:
            preds.append((BASELINE, samples[0]))
        for spec in cfg.variants:
            try:
                preds.append((spec.name, aggregate(samples, spec.config(cfg.jaccard_threshold, cfg.engine))))
            except GraphMDLError as exc:
                raise type(exc)(f"[aggregate variant={spec.name} T={T} seed={seed}] {exc}") from exc
        for name, pred in preds:
            for metric in cfg.metrics:
                rows.append({"variant": name, "T": T, "seed": seed, "metric": metric,
                             "value": float(METRICS[metric](pred, truth))})
    return rows


def run_pipeline(cfg: PipelineConfig, n_jobs: int = 1) -> list[dict]:
    """Tidy rows (variant, T, seed, metric, value) in a deterministic order."""
    if n_jobs > 1:
        with ProcessPoolExecutor(max_workers=n_jobs) as ex:
            per_seed = list(ex.map(_run_seed, [cfg] * len(cfg.seeds), cfg.seeds))
    else:
        per_seed = [_run_seed(cfg, s) for s in cfg.seeds]
    return [r for rows in per_seed for r in rows]


def summarize(rows: list[dict]) -> list[dict]:
    groups: dict[tuple, list[float]] = defaultdict(list)
    order = []
    for r in rows:
        key = (r["variant"], r["T"], r["metric"])
        if key not in groups:
            order.append(key)
        groups[key].append(r["value"])
    out = []
    for key in order:
        vals = groups[key]
        out.append({
            "variant": key[0], "T": key[1], "metric": key[2],
            "mean": math.fsum(vals) / len(vals),
            "std": statistics.pstdev(vals) if len(vals) > 1 else 0.0,
            "n": len(vals),
        })
    return out


def write_csv(rows: list[dict], path, columns: Optional[list[str]] = None) -> None:
    columns = columns or (list(rows[0]) if rows else [])
    with open(Path(path), "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([repr(r[c]) if isinstance(r[c], float) else r[c] for c in columns])
