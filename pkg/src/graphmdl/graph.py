"""Graph data model: typed nodes, typed directed edges, and basic graph queries."""

from __future__ import annotations

import heapq
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable, Optional

from .exceptions import CycleError, DataError


@dataclass(frozen=True)
class Node:
    id: int
    content: str
    node_type: str = ""
    # token offsets [start, end) into the source document, when known
    span: Optional[tuple[int, int]] = None

    def __post_init__(self):
        if not isinstance(self.content, str) or not self.content.strip():
            raise DataError(f"node {self.id!r} has empty content")
        if self.span is not None:
            start, end = self.span
            if not 0 <= start < end:
                raise DataError(f"node {self.id!r} has invalid span {self.span!r}")
            object.__setattr__(self, "span", (int(start), int(end)))

    @property
    def key(self) -> str:
        """Content string used as the node's identity across graphs."""
        return self.content.strip()


@dataclass(frozen=True)
class Edge:
    head: int
    tail: int
    edge_type: str = ""

    @property
    def pair(self) -> tuple[int, int]:
        return (self.head, self.tail)


@dataclass(frozen=True)
class Graph:
    """Directed graph with at most one edge per ordered node pair.

    Node ids are opaque integers, unique within the graph. Cross-graph
    comparisons (metrics) go through node content, never ids.
    """

    nodes: tuple[Node, ...] = ()
    edges: tuple[Edge, ...] = ()
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "edges", tuple(self.edges))
        ids = [n.id for n in self.nodes]
        if len(set(ids)) != len(ids):
            raise DataError("duplicate node ids")
        known = set(ids)
        seen = set()
        for e in self.edges:
            if e.head not in known or e.tail not in known:
                raise DataError(f"edge {e.pair} references a missing node")
            if e.pair in seen:
                raise DataError(f"duplicate edge {e.pair}")
            seen.add(e.pair)

    def node(self, node_id: int) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise KeyError(node_id)

    @property
    def node_map(self) -> dict[int, Node]:
        return {n.id: n for n in self.nodes}

    def edge_keys(self) -> list[tuple[str, str, str]]:
        """(head content, tail content, edge type) for every edge."""
        nm = self.node_map
        return [(nm[e.head].key, nm[e.tail].key, e.edge_type) for e in self.edges]

    def successors(self) -> dict[int, list[int]]:
        out = {n.id: [] for n in self.nodes}
        for e in self.edges:
            out[e.head].append(e.tail)
        return out

    def __len__(self):
        return len(self.nodes)


def _kahn(node_ids: Iterable[int], pairs: Iterable[tuple[int, int]]) -> list[int]:
    ids = sorted(set(node_ids))
    indeg = dict.fromkeys(ids, 0)
    succ = {i: [] for i in ids}
    for h, t in pairs:
        succ[h].append(t)
        indeg[t] += 1
    heap = [i for i in ids if indeg[i] == 0]
    heapq.heapify(heap)
    order = []
    while heap:
        u = heapq.heappop(heap)
        order.append(u)
        for v in succ[u]:
            indeg[v] -= 1
            if indeg[v] == 0:
                heapq.heappush(heap, v)
    return order


def topological_order(g: Graph) -> list[int]:
    """Node ids in topological order, ties broken by smallest id first.

    Raises
    ------
    CycleError
        If ``g`` has a directed cycle (self-loops included).
    """
    order = _kahn((n.id for n in g.nodes), (e.pair for e in g.edges))
    if len(order) != len(g.nodes):
        raise CycleError("graph contains a directed cycle")
    return order


def is_dag(g: Graph) -> bool:
    return len(_kahn((n.id for n in g.nodes), (e.pair for e in g.edges))) == len(g.nodes)


def pairs_acyclic(pairs: Iterable[tuple[int, int]]) -> bool:
    """Acyclicity test for a bare collection of directed pairs."""
    pairs = list(pairs)
    ids = {x for p in pairs for x in p}
    return len(_kahn(ids, pairs)) == len(ids)


def find_cycle(pairs: Iterable[tuple[int, int]]) -> Optional[list[tuple[int, int]]]:
    """Return the edges of one directed cycle, or None if acyclic.

    Deterministic: DFS from nodes in sorted order, successors sorted.
    """
    succ: dict[int, list[int]] = {}
    for h, t in pairs:
        succ.setdefault(h, []).append(t)
        succ.setdefault(t, [])
    for v in succ:
        succ[v].sort()
    color = dict.fromkeys(succ, 0)
    parent: dict[int, int] = {}
    for root in sorted(succ):
        if color[root]:
            continue
        stack = [(root, iter(succ[root]))]
        color[root] = 1
        while stack:
            u, it = stack[-1]
            nxt = next(it, None)
            if nxt is None:
                color[u] = 2
                stack.pop()
                continue
            if color[nxt] == 0:
                color[nxt] = 1
                parent[nxt] = u
                stack.append((nxt, iter(succ[nxt])))
            elif color[nxt] == 1:
                cycle = [(u, nxt)]
                w = u
                while w != nxt:
                    cycle.append((parent[w], w))
                    w = parent[w]
                cycle.reverse()
                return cycle
    return None


def prf(tp: int, fp: int, fn: int, empty_value: float = 1.0) -> tuple[float, float, float]:
    """Precision, recall, F1 from tallies.

    When there is nothing predicted and nothing to find, all three are
    ``empty_value``. Otherwise an undefined ratio is 0.
    """
    if tp + fp + fn == 0:
        return empty_value, empty_value, empty_value
    p = tp / (tp + fp) if tp + fp else 0.0
    r = tp / (tp + fn) if tp + fn else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def edge_multiset_f1(pred: Graph, gold: Graph) -> float:
    """F1 between the edge multisets of two graphs, keyed by endpoint content and type."""
    pc = Counter(pred.edge_keys())
    gc = Counter(gold.edge_keys())
    tp = sum((pc & gc).values())
    fp = sum(pc.values()) - tp
    fn = sum(gc.values()) - tp
    return prf(tp, fp, fn)[2]


def relabel(g: Graph, meta: Optional[dict] = None) -> Graph:
    """Copy of ``g`` with node ids renumbered densely 0..n-1 in node order."""
    remap = {n.id: i for i, n in enumerate(g.nodes)}
    nodes = [Node(remap[n.id], n.content, n.node_type, n.span) for n in g.nodes]
    edges = [Edge(remap[e.head], remap[e.tail], e.edge_type) for e in g.edges]
    return Graph(nodes, edges, dict(g.meta if meta is None else meta))
