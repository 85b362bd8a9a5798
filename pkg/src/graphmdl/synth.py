"""Synthetic ground-truth DAGs and noisy sample sets for benchmarking."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .exceptions import ConfigError
from .graph import Edge, Graph, Node, topological_order
from .io import SampleSet

# Node contents are built from disjoint word blocks, so distinct truth
# nodes never share a token.
_SYLLABLES = ["ka", "lo", "mi", "ren", "tu", "sa", "vo", "pel", "dri", "no", "gu", "zet"]
NODE_TYPES = ("Claim", "Premise")
EDGE_TYPES = ("support", "attack")
WORDS_PER_NODE = 4


def _word(k: int) -> str:
    # bijective base-12 spelling: every k gets a distinct word
    parts = []
    k += 1
    while k:
        k, r = divmod(k - 1, len(_SYLLABLES))
        parts.append(_SYLLABLES[r])
    return "".join(reversed(parts))


@dataclass(frozen=True)
class NoiseModel:
    edge_delete_prob: float = 0.0
    edge_add_prob: float = 0.0
    node_delete_prob: float = 0.0
    content_paraphrase_prob: float = 0.0
    seed: int = 0
    allow_cycles: bool = False

    def __post_init__(self):
        for name in ("edge_delete_prob", "edge_add_prob", "node_delete_prob", "content_paraphrase_prob"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ConfigError(f"{name} must lie in [0, 1], got {v}")

    @classmethod
    def from_dict(cls, d: dict) -> "NoiseModel":
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ConfigError(f"unknown noise fields {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


def generate_truth(n_nodes: int, edge_density: float, seed: int = 0) -> Graph:
    """Random DAG: a random topological order, each forward pair kept with
    probability ``edge_density``."""
    if n_nodes < 1:
        raise ConfigError("n_nodes must be >= 1")
    if not 0.0 <= edge_density <= 1.0:
        raise ConfigError("edge_density must lie in [0, 1]")
    rng = np.random.default_rng(seed)
    word_ids = rng.permutation(n_nodes * WORDS_PER_NODE * 3)[: n_nodes * WORDS_PER_NODE]
    nodes = []
    for i in range(n_nodes):
        words = [_word(int(w)) for w in word_ids[i * WORDS_PER_NODE:(i + 1) * WORDS_PER_NODE]]
        nodes.append(Node(i, " ".join(words), NODE_TYPES[int(rng.integers(len(NODE_TYPES)))]))
    order = [int(v) for v in rng.permutation(n_nodes)]
    edges = []
    for a in range(n_nodes):
        for b in range(a + 1, n_nodes):
            if rng.random() < edge_density:
                edges.append(Edge(order[a], order[b], EDGE_TYPES[int(rng.integers(len(EDGE_TYPES)))]))
    return Graph(nodes, edges, {"seed": seed, "order": order})


def _paraphrase(content: str, rate: float, rng: np.random.Generator) -> str:
    # per token: with probability `rate` drop it or duplicate it (50/50)
    toks = content.split()
    out = []
    for tok in toks:
        if rng.random() < rate:
            if rng.random() < 0.5:
                continue
            out.extend([tok, tok])
        else:
            out.append(tok)
    if not out:
        out = [toks[int(rng.integers(len(toks)))]]
    return " ".join(out)


def _corrupt_one(truth: Graph, order: list[int], noise: NoiseModel, rng: np.random.Generator) -> Graph:
    rank = {v: i for i, v in enumerate(order)}
    keep = [n for n in truth.nodes if rng.random() >= noise.node_delete_prob]
    kept_ids = {n.id for n in keep}
    edges = [e for e in truth.edges
             if e.head in kept_ids and e.tail in kept_ids and rng.random() >= noise.edge_delete_prob]
    truth_pairs = {e.pair for e in truth.edges}
    ids = sorted(kept_ids, key=rank.__getitem__)
    for a in ids:
        for b in ids:
            if a == b or (a, b) in truth_pairs:
                continue
            if not noise.allow_cycles and rank[a] > rank[b]:
                continue
            if rng.random() < noise.edge_add_prob:
                edges.append(Edge(a, b, EDGE_TYPES[int(rng.integers(len(EDGE_TYPES)))]))
    nodes = [Node(n.id, _paraphrase(n.content, noise.content_paraphrase_prob, rng), n.node_type)
             if noise.content_paraphrase_prob > 0 else n for n in keep]
    return Graph(nodes, edges)


def corrupt(truth: Graph, noise: NoiseModel, t_samples: int) -> SampleSet:
    """``t_samples`` independently corrupted copies of ``truth``.

    Sample ``i`` draws from its own generator spawned from ``noise.seed``,
    so samples are reproducible individually. Unless ``allow_cycles`` is
    set, added edges follow the truth's topological order and every sample
    stays acyclic.
    """
    if t_samples < 1:
        raise ConfigError("t_samples must be >= 1")
    order = truth.meta.get("order") or topological_order(truth)
    seqs = np.random.SeedSequence(noise.seed).spawn(t_samples)
    samples = [_corrupt_one(truth, order, noise, np.random.default_rng(s)) for s in seqs]
    return SampleSet(samples, {"seed": noise.seed, "noise": noise.to_dict()})


def make_instance(n_nodes: int, density: float, noise: NoiseModel, t_samples: int, seed: int):
    """(truth, samples) pair with truth and noise both derived from ``seed``."""
    truth = generate_truth(n_nodes, density, seed)
    samples = corrupt(truth, NoiseModel(**{**noise.to_dict(), "seed": seed}), t_samples)
    return truth, samples
