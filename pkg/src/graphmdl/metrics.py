"""Automatic metrics for predicted reasoning graphs.

Component and relation scores work on token spans carried by nodes
(``Node.span``). Edge, triple and edit-distance scores identify nodes by
their content string.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import asdict, dataclass, field
from typing import NamedTuple, Optional, Sequence

from .exceptions import ConfigError, SizeError, SpanError
from .graph import Graph, edge_multiset_f1, is_dag, prf
from .pool import tokens

GED_EXACT_MAX_NODES = 8

STOPWORDS = frozenset("""
a an the and or but if of to in on at by for with from as is are was were be been being
it its this that these those not no do does did can could should would will may might must
has have had i you he she we they them his her their our your my me us so than then there
""".split())


class PRF(NamedTuple):
    precision: float
    recall: float
    f1: float


# --- BIO / component scores -------------------------------------------------

def _spans(g: Graph) -> list[tuple[int, int, str]]:
    out = sorted((n.span[0], n.span[1], n.node_type) for n in g.nodes if n.span is not None)
    for (s1, e1, _), (s2, _, _) in zip(out, out[1:]):
        if s2 < e1:
            raise SpanError(f"overlapping spans starting at {s1} and {s2}")
    return out


def to_bio(g: Graph, n_tokens: Optional[int] = None) -> list[str]:
    """BIO labels over a token sequence from the node spans of ``g``.

    Raises
    ------
    SpanError
        If two spans overlap or a span runs past ``n_tokens``.
    """
    spans = _spans(g)
    length = max([e for _, e, _ in spans], default=0) if n_tokens is None else n_tokens
    labels = ["O"] * length
    for s, e, t in spans:
        if e > length:
            raise SpanError(f"span ({s}, {e}) exceeds document length {length}")
        labels[s] = f"B-{t}"
        for i in range(s + 1, e):
            labels[i] = f"I-{t}"
    return labels


def bio_to_spans(labels: Sequence[str]) -> set[tuple[int, int, str]]:
    """Chunks (start, end, type) of a BIO sequence; a stray I- opens a chunk."""
    chunks = set()
    start, ctype = None, None
    for i, lab in enumerate(list(labels) + ["O"]):
        tag, _, typ = lab.partition("-")
        continues = tag == "I" and start is not None and typ == ctype
        if start is not None and not continues:
            chunks.add((start, i, ctype))
            start = None
        if tag == "B" or (tag == "I" and not continues):
            start, ctype = i, typ
    return chunks


def component_f1(pred: Graph, gold: Graph, n_tokens: Optional[int] = None) -> PRF:
    """Span-level P/R/F1 of typed components, tallied from BIO labelings."""
    if n_tokens is None:
        ends = [n.span[1] for g in (pred, gold) for n in g.nodes if n.span is not None]
        n_tokens = max(ends, default=0)
    ps = bio_to_spans(to_bio(pred, n_tokens))
    gs = bio_to_spans(to_bio(gold, n_tokens))
    tp = len(ps & gs)
    return PRF(*prf(tp, len(ps) - tp, len(gs) - tp))


# --- relation scores ----------------------------------------------------------

EXACT = "exact"
HALF = "half"


def _overlap(p: tuple[int, int], g: tuple[int, int], denominator: str) -> float:
    inter = max(0, min(p[1], g[1]) - max(p[0], g[0]))
    if denominator == "gold":
        d = g[1] - g[0]
    elif denominator == "pred":
        d = p[1] - p[0]
    elif denominator == "union":
        d = max(p[1], g[1]) - min(p[0], g[0]) if inter else (p[1] - p[0]) + (g[1] - g[0])
    else:
        raise ConfigError(f"unknown overlap denominator {denominator!r}")
    return inter / d


def _span_edges(g: Graph):
    nm = g.node_map
    out = []
    for e in g.edges:
        h, t = nm[e.head].span, nm[e.tail].span
        if h is not None and t is not None:
            out.append((h, t, e.edge_type))
    return out


def match_relations(pred: Graph, gold: Graph, overlap: str = EXACT, typed: bool = True,
                    denominator: str = "gold") -> list[tuple[int, int]]:
    """One-to-one matching of predicted to gold relations.

    Candidates are ranked by (min, sum) of head/tail overlap, then by
    index, and accepted greedily. Exact matches rank first in either mode,
    so exact-mode matches are always a subset of half-mode matches.
    """
    if overlap not in (EXACT, HALF):
        raise ConfigError(f"overlap must be {EXACT!r} or {HALF!r}")
    pe, ge = _span_edges(pred), _span_edges(gold)
    cands = []
    for i, (ph, pt, ptype) in enumerate(pe):
        for j, (gh, gt, gtype) in enumerate(ge):
            if overlap == EXACT or typed:
                if ptype != gtype:
                    continue
            if overlap == EXACT:
                if ph == gh and pt == gt:
                    cands.append((-1.0, -2.0, i, j))
                continue
            oh, ot = _overlap(ph, gh, denominator), _overlap(pt, gt, denominator)
            if oh >= 0.5 and ot >= 0.5:
                cands.append((-min(oh, ot), -(oh + ot), i, j))
    cands.sort()
    used_p, used_g, matches = set(), set(), []
    for _, _, i, j in cands:
        if i not in used_p and j not in used_g:
            used_p.add(i)
            used_g.add(j)
            matches.append((i, j))
    return matches


def relation_scores(pred: Graph, gold: Graph, overlap: str = EXACT, typed: bool = True,
                    denominator: str = "gold") -> PRF:
    tp = len(match_relations(pred, gold, overlap, typed, denominator))
    n_pred, n_gold = len(_span_edges(pred)), len(_span_edges(gold))
    return PRF(*prf(tp, n_pred - tp, n_gold - tp))


def relation_f1(pred: Graph, gold: Graph, overlap: str = EXACT, typed: bool = True,
                denominator: str = "gold") -> float:
    """Relation F1 with exact span match (``"exact"``) or >= 50% token overlap (``"half"``)."""
    return relation_scores(pred, gold, overlap, typed, denominator).f1


def error_counts(pred: Graph, gold: Graph) -> dict[str, int]:
    """Spurious, omitted and reversed edges, by endpoint content and type.

    A predicted edge absent from gold whose reverse is an unmatched gold
    edge counts as reversed (and is not also spurious/omitted), so
    ``spurious + reversed == FP`` and ``omitted + reversed == FN``.
    """
    pc, gc = Counter(pred.edge_keys()), Counter(gold.edge_keys())
    fp = pc - gc
    fn = gc - pc
    fn_pairs = Counter()
    for (h, t, _), k in fn.items():
        fn_pairs[(h, t)] += k
    reversed_ = 0
    for (h, t, _), k in sorted(fp.items()):
        take = min(k, fn_pairs[(t, h)])
        fn_pairs[(t, h)] -= take
        reversed_ += take
    return {
        "spurious_edges": sum(fp.values()) - reversed_,
        "omitted_edges": sum(fn.values()) - reversed_,
        "reversed_edges": reversed_,
    }


# --- structure ----------------------------------------------------------------

def _content_words(text: str) -> frozenset[str]:
    return frozenset(t for t in tokens(text) if t not in STOPWORDS)


def _weakly_connected(g: Graph) -> bool:
    if not g.nodes:
        return False
    adj = {n.id: set() for n in g.nodes}
    for e in g.edges:
        adj[e.head].add(e.tail)
        adj[e.tail].add(e.head)
    start = g.nodes[0].id
    seen, stack = {start}, [start]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(adj)


def structural_accuracy(pred: Graph, belief: str, argument: str) -> int:
    """1 if ``pred`` is a connected DAG with at least two concepts taken from
    each of the belief and the argument, else 0.

    A concept is taken from a text when it shares a non-stopword token with it.
    """
    if not _weakly_connected(pred) or not is_dag(pred):
        return 0
    bw, aw = _content_words(belief), _content_words(argument)
    from_belief = sum(1 for n in pred.nodes if _content_words(n.content) & bw)
    from_argument = sum(1 for n in pred.nodes if _content_words(n.content) & aw)
    return int(from_belief >= 2 and from_argument >= 2)


# --- graph edit distance -------------------------------------------------------

class _GedInstance:
    # Unit costs: node/edge insertion and deletion, node type relabel, edge
    # type relabel. Nodes can only be matched when their contents agree.

    def __init__(self, pred: Graph, gold: Graph):
        self.p = list(pred.nodes)
        self.g = list(gold.nodes)
        pidx = {n.id: i for i, n in enumerate(self.p)}
        gidx = {n.id: i for i, n in enumerate(self.g)}
        self.pe = {(pidx[e.head], pidx[e.tail]): e.edge_type for e in pred.edges}
        self.ge = {(gidx[e.head], gidx[e.tail]): e.edge_type for e in gold.edges}
        self.cands = [[j for j, gn in enumerate(self.g) if gn.key == pn.key] for pn in self.p]

    def cost(self, mapping: dict[int, int]) -> int:
        c = 0
        for i, pn in enumerate(self.p):
            j = mapping.get(i)
            c += 1 if j is None else int(pn.node_type != self.g[j].node_type)
        c += len(self.g) - len(mapping)
        covered = set()
        for (a, b), typ in self.pe.items():
            ga, gb = mapping.get(a), mapping.get(b)
            if ga is not None and gb is not None and (ga, gb) in self.ge:
                covered.add((ga, gb))
                c += int(typ != self.ge[(ga, gb)])
            else:
                c += 1
        c += len(self.ge) - len(covered)
        return c

    def _step_cost(self, i: int, j: Optional[int], assigned: dict[int, Optional[int]]) -> int:
        # cost of pred node i and its edges to already-assigned pred nodes
        # (``assigned`` maps pred index -> gold index or None for deletion)
        c = 1 if j is None else int(self.p[i].node_type != self.g[j].node_type)
        links = [((i, i), (j, j))]
        for a, ga in assigned.items():
            links += [((i, a), (j, ga)), ((a, i), (ga, j))]
        for pp, (gx, gy) in links:
            in_p = pp in self.pe
            in_g = gx is not None and gy is not None and (gx, gy) in self.ge
            if in_p and in_g:
                c += int(self.pe[pp] != self.ge[(gx, gy)])
            elif in_p or in_g:
                c += 1
        return c

    def exact(self) -> int:
        best = [self.cost({})]

        def rest_cost(used):
            # unmatched gold nodes plus gold edges touching them
            c = len(self.g) - len(used)
            return c + sum(1 for (a, b) in self.ge if a not in used or b not in used)

        def dfs(i, assigned, used, acc):
            if acc >= best[0]:
                return
            if i == len(self.p):
                best[0] = min(best[0], acc + rest_cost(used))
                return
            for j in self.cands[i] + [None]:
                if j is not None and j in used:
                    continue
                step = self._step_cost(i, j, assigned)
                assigned[i] = j
                if j is not None:
                    used.add(j)
                dfs(i + 1, assigned, used, acc + step)
                del assigned[i]
                used.discard(j)

        dfs(0, {}, set(), 0)
        return best[0]

    def greedy(self) -> int:
        def neigh(nodes, edges, i):
            return {nodes[b].key for (a, b) in edges if a == i} | {nodes[a].key for (a, b) in edges if b == i}

        pairs = []
        for i, js in enumerate(self.cands):
            for j in js:
                same_type = self.p[i].node_type == self.g[j].node_type
                pn, gn = neigh(self.p, self.pe, i), neigh(self.g, self.ge, j)
                sim = len(pn & gn) / len(pn | gn) if pn | gn else 1.0
                pairs.append((-int(same_type), -sim, i, j))
        pairs.sort()
        mapping, used = {}, set()
        for _, _, i, j in pairs:
            if i not in mapping and j not in used:
                mapping[i] = j
                used.add(j)
        return self.cost(mapping)


def graph_edit_distance(pred: Graph, gold: Graph, mode: str = "exact", normalize: bool = True) -> float:
    """Edit distance from ``pred`` to ``gold`` with unit costs.

    Normalised by the cost of deleting all of ``pred`` plus building all of
    ``gold``, which maps to [0, 1]. ``"greedy"`` returns an upper bound of
    the exact value.

    Raises
    ------
    SizeError
        In exact mode when either graph has more than 8 nodes.
    """
    inst = _GedInstance(pred, gold)
    if mode == "exact":
        if max(len(pred.nodes), len(gold.nodes)) > GED_EXACT_MAX_NODES:
            raise SizeError(f"exact GED limited to {GED_EXACT_MAX_NODES} nodes")
        raw = inst.exact()
    elif mode == "greedy":
        raw = inst.greedy()
    else:
        raise ConfigError(f"unknown GED mode {mode!r}")
    if not normalize:
        return float(raw)
    denom = len(pred.nodes) + len(pred.edges) + len(gold.nodes) + len(gold.edges)
    return raw / denom if denom else 0.0


# --- triples ----------------------------------------------------------------

def _triples(g: Graph) -> set[tuple[str, str, str]]:
    nm = g.node_map
    return {
        (nm[e.head].content.strip().lower(), e.edge_type.strip().lower(), nm[e.tail].content.strip().lower())
        for e in g.edges
    }


def triple_f1(pred: Graph, gold: Graph) -> tuple[float, int]:
    """(triple-set F1, exact graph match indicator) for one instance."""
    pt, gt = _triples(pred), _triples(gold)
    tp = len(pt & gt)
    f = prf(tp, len(pt) - tp, len(gt) - tp)[2]
    return f, int(f == 1.0)


# --- reports ----------------------------------------------------------------

TASKS = ("argmine", "explagraph", "proscript", "semgraph")


@dataclass
class EvalReport:
    c_f1: Optional[float] = None
    c_precision: Optional[float] = None
    c_recall: Optional[float] = None
    r100_f1: Optional[float] = None
    r50_f1: Optional[float] = None
    edge_f1: Optional[float] = None
    t_f1: Optional[float] = None
    g_f1: Optional[float] = None
    stca: Optional[float] = None
    ged: Optional[float] = None
    # need learned scoring models; always null
    seca: Optional[float] = None
    g_bs: Optional[float] = None
    error_counts: dict = field(default_factory=dict)
    n_instances: int = 1

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate(pred: Graph, gold: Graph, task: str = "proscript", *, typed_r50: bool = True,
             overlap_denominator: str = "gold", ged_mode: str = "auto") -> EvalReport:
    """Score one prediction. Explagraph instances read ``belief`` and
    ``argument`` from ``gold.meta`` for structural accuracy."""
    if task not in TASKS:
        raise ConfigError(f"unknown task {task!r}; choose from {TASKS}")
    rep = EvalReport(edge_f1=edge_multiset_f1(pred, gold), error_counts=error_counts(pred, gold))
    if task == "argmine":
        c = component_f1(pred, gold)
        rep.c_precision, rep.c_recall, rep.c_f1 = c
        rep.r100_f1 = relation_f1(pred, gold, EXACT)
        rep.r50_f1 = relation_f1(pred, gold, HALF, typed_r50, overlap_denominator)
    if task in ("explagraph", "proscript"):
        mode = ged_mode
        if mode == "auto":
            big = max(len(pred.nodes), len(gold.nodes)) > GED_EXACT_MAX_NODES
            mode = "greedy" if big else "exact"
        rep.ged = graph_edit_distance(pred, gold, mode)
    if task == "explagraph":
        belief = gold.meta.get("belief", "")
        argument = gold.meta.get("argument", "")
        rep.stca = float(structural_accuracy(pred, belief, argument))
    if task == "semgraph":
        rep.t_f1, g = triple_f1(pred, gold)
        rep.g_f1 = float(g)
    return rep


def evaluate_corpus(preds: Sequence[Graph], golds: Sequence[Graph], task: str = "proscript",
                    **kwargs) -> EvalReport:
    """Macro-average of per-instance reports (error counts averaged too)."""
    if len(preds) != len(golds):
        raise ConfigError(f"{len(preds)} predictions for {len(golds)} gold graphs")
    if not preds:
        raise ConfigError("empty corpus")
    reports = [evaluate(p, g, task, **kwargs) for p, g in zip(preds, golds)]
    out = EvalReport(n_instances=len(reports))
    for name in ("c_f1", "c_precision", "c_recall", "r100_f1", "r50_f1", "edge_f1", "t_f1",
                 "g_f1", "stca", "ged"):
        vals = [getattr(r, name) for r in reports]
        if all(v is not None for v in vals):
            setattr(out, name, math.fsum(vals) / len(vals))
    keys = reports[0].error_counts
    out.error_counts = {k: sum(r.error_counts[k] for r in reports) / len(reports) for k in keys}
    return out
