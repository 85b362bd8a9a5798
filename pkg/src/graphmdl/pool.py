"""Node and edge pools built from a sample set by lexical Jaccard merging."""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

from .exceptions import ConfigError
from .io import SampleSet

_TOKEN = re.compile(r"[^\W_]+")


def tokens(text: str) -> frozenset[str]:
    """Lowercased tokens, split on whitespace and punctuation."""
    return frozenset(_TOKEN.findall(text.lower()))


def jaccard(a: str, b: str) -> float:
    """Jaccard similarity of the token sets of ``a`` and ``b`` (1.0 if both are empty)."""
    return _jac_sets(tokens(a), tokens(b))


def _mode(labels: list[str]) -> str:
    # ties go to the label seen first
    counts: dict[str, int] = {}
    for lab in labels:
        counts[lab] = counts.get(lab, 0) + 1
    best = max(counts.values())
    return next(lab for lab in counts if counts[lab] == best)


@dataclass
class PooledNode:
    id: int
    content_list: list[str] = field(default_factory=list)
    type_list: list[str] = field(default_factory=list)
    span_list: list[Optional[tuple[int, int]]] = field(default_factory=list)
    sample_ids: set[int] = field(default_factory=set)

    @property
    def representative_content(self) -> str:
        return elect_representative(self)[0]

    @property
    def representative_type(self) -> str:
        return elect_representative(self)[1]

    @property
    def representative_span(self) -> Optional[tuple[int, int]]:
        content = self.representative_content
        return self.span_list[self.content_list.index(content)]


@dataclass
class PooledEdge:
    head: int
    tail: int
    type_list: list[str] = field(default_factory=list)
    sample_ids: set[int] = field(default_factory=set)

    @property
    def representative_type(self) -> str:
        return _mode(self.type_list)

    @property
    def degenerate(self) -> bool:
        return self.head == self.tail


@dataclass
class Pool:
    """Canonical node and edge universe with occurrence bookkeeping.

    ``node_map[i][j]`` is the pooled id of the node with id ``j`` in
    sample ``i``. Ordered pairs never observed are implicit, with
    probability zero.
    """

    nodes: list[PooledNode]
    edges: list[PooledEdge]
    T: int
    jaccard_threshold: float
    node_map: list[dict[int, int]] = field(default_factory=list)

    def node_probability(self, node_id: int) -> float:
        return len(self.nodes[node_id].sample_ids) / self.T

    def edge_probability(self, pair: tuple[int, int]) -> float:
        e = self.edge_index.get(pair)
        return 0.0 if e is None else len(e.sample_ids) / self.T

    @property
    def edge_index(self) -> dict[tuple[int, int], PooledEdge]:
        return {(e.head, e.tail): e for e in self.edges}

    def to_dict(self) -> dict:
        return {
            "T": self.T,
            "jaccard_threshold": self.jaccard_threshold,
            "nodes": [
                {
                    "id": n.id,
                    "content": n.representative_content,
                    "type": n.representative_type,
                    "probability": len(n.sample_ids) / self.T,
                    "content_list": list(n.content_list),
                    "type_list": list(n.type_list),
                    "sample_ids": sorted(n.sample_ids),
                }
                for n in self.nodes
            ],
            "edges": [
                {
                    "head": e.head,
                    "tail": e.tail,
                    "type": e.representative_type,
                    "probability": len(e.sample_ids) / self.T,
                    "type_list": list(e.type_list),
                    "sample_ids": sorted(e.sample_ids),
                }
                for e in self.edges
            ],
        }


def build_pool(samples: SampleSet, threshold: float = 0.5) -> Pool:
    """Merge the nodes and edges of all samples into one pool.

    Samples are visited in index order and nodes in declaration order. A
    node joins the first pooled node having any recorded content with
    Jaccard similarity >= ``threshold``; otherwise it starts a new pooled
    node. Each sample counts at most once towards an element's occurrence.
    """
    if not 0.0 <= threshold <= 1.0:
        raise ConfigError(f"jaccard threshold must lie in [0, 1], got {threshold}")
    pooled: list[PooledNode] = []
    pooled_tokens: list[list[frozenset[str]]] = []
    edges: dict[tuple[int, int], PooledEdge] = {}
    node_map: list[dict[int, int]] = []

    for i, g in enumerate(samples.samples):
        mapping: dict[int, int] = {}
        for n in g.nodes:
            toks = tokens(n.content)
            target = None
            for pn, plist in zip(pooled, pooled_tokens):
                if any(_jac_sets(toks, t) >= threshold for t in plist):
                    target = pn
                    break
            if target is None:
                target = PooledNode(len(pooled))
                pooled.append(target)
                pooled_tokens.append([])
            target.content_list.append(n.content.strip())
            target.type_list.append(n.node_type)
            target.span_list.append(n.span)
            target.sample_ids.add(i)
            pooled_tokens[target.id].append(toks)
            mapping[n.id] = target.id
        for e in g.edges:
            pair = (mapping[e.head], mapping[e.tail])
            pe = edges.get(pair)
            if pe is None:
                pe = edges[pair] = PooledEdge(*pair)
            pe.type_list.append(e.edge_type)
            pe.sample_ids.add(i)
        node_map.append(mapping)

    return Pool(pooled, list(edges.values()), samples.T, threshold, node_map)


def _jac_sets(a: frozenset, b: frozenset) -> float:
    union = a | b
    if not union:
        return 1.0
    return len(a & b) / len(union)


def elect_representative(n: PooledNode) -> tuple[str, str]:
    """Representative (content, type) of a pooled node.

    Content is the list element with the highest mean Jaccard similarity
    to the other elements, ties going to the shorter then lexicographically
    smaller string. Type is the mode of the type list.
    """
    contents = n.content_list
    if len(contents) == 1:
        return contents[0], n.type_list[0]
    toks = [tokens(c) for c in contents]
    best, best_key = None, None
    for i, c in enumerate(contents):
        score = sum(_jac_sets(toks[i], toks[j]) for j in range(len(contents)) if j != i)
        score /= len(contents) - 1
        key = (-round(score, 12), len(c), c)
        if best_key is None or key < best_key:
            best, best_key = c, key
    return best, _mode(n.type_list)
