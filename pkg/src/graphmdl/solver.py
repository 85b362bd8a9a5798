"""Exact 0-1 selection of weighted nodes and edges under coupling and acyclicity constraints.

The problem is::

    minimize   sum_e w_e x_e + sum_n w_n y_n
    subject to x_e <= y_head, x_e <= y_tail      (couplings, when present)
               {e : x_e = 1} is acyclic           (when require_dag)
               x, y binary

Two exact engines solve it by LP-based branch and bound:

``solve_transitive_closure``
    Path indicators ``b_(i,j)`` with ``x_e <= b_e``, transitivity
    ``b_ik >= b_ij + b_jk - 1`` and ``b_ii = 0``, all materialised up front.
``solve_lazy_cycles``
    Starts with no acyclicity rows and adds ``sum_{e in C} x_e <= |C| - 1``
    for each directed cycle ``C`` found in an integral incumbent.

``brute_force`` enumerates every selection and serves as a test oracle.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from itertools import permutations
from typing import Callable, Optional

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .exceptions import InfeasibleSelection, SizeError, SolverTimeoutError
from .graph import find_cycle, pairs_acyclic

logger = logging.getLogger(__name__)

TOL = 1e-9
INT_TOL = 1e-6
CLOSURE_MAX_NODES = 60
BRUTE_FORCE_MAX_ELEMENTS = 20

OPTIMAL = "optimal"
HEURISTIC = "heuristic"

Pair = tuple[int, int]


@dataclass
class WeightedSelectionProblem:
    """Per-element weights plus constraint families.

    ``couplings`` holds ``(edge, head_node, tail_node)`` triples; an edge
    with a coupling may only be selected together with both nodes. An
    edge-only problem has empty ``node_weights`` and no couplings.
    """

    node_weights: dict[int, float] = field(default_factory=dict)
    edge_weights: dict[Pair, float] = field(default_factory=dict)
    couplings: list[tuple[Pair, int, int]] = field(default_factory=list)
    require_dag: bool = True

    def __post_init__(self):
        for e, h, t in self.couplings:
            if e not in self.edge_weights or h not in self.node_weights or t not in self.node_weights:
                raise ValueError(f"coupling {(e, h, t)} references unknown elements")

    @property
    def n_elements(self) -> int:
        return len(self.node_weights) + len(self.edge_weights)

    def coupling_map(self) -> dict[Pair, tuple[int, int]]:
        return {e: (h, t) for e, h, t in self.couplings}


@dataclass
class Selection:
    chosen_nodes: frozenset = frozenset()
    chosen_edges: frozenset = frozenset()
    objective: float = 0.0
    certificate: str = OPTIMAL
    stats: dict = field(default_factory=dict, compare=False)


def check_feasible(problem: WeightedSelectionProblem, nodes, edges) -> None:
    """Raise InfeasibleSelection if the selection breaks a constraint."""
    nodes, edges = set(nodes), set(edges)
    unknown = (nodes - problem.node_weights.keys()) | {
        e for e in edges if e not in problem.edge_weights
    }
    if unknown:
        raise InfeasibleSelection(f"selection contains unknown elements {sorted(unknown)}")
    for e, h, t in problem.couplings:
        if e in edges and not (h in nodes and t in nodes):
            raise InfeasibleSelection(f"edge {e} selected without both endpoints")
    if problem.require_dag and not pairs_acyclic(edges):
        raise InfeasibleSelection("selected edges contain a directed cycle")


def objective_value(problem: WeightedSelectionProblem, selection) -> float:
    """Sum of the weights of the selected elements.

    ``selection`` is a :class:`Selection` or a ``(nodes, edges)`` pair.

    Raises
    ------
    InfeasibleSelection
        If couplings or acyclicity are violated.
    """
    if isinstance(selection, Selection):
        nodes, edges = selection.chosen_nodes, selection.chosen_edges
    else:
        nodes, edges = selection
    check_feasible(problem, nodes, edges)
    return float(sum(problem.node_weights[n] for n in nodes)
                 + sum(problem.edge_weights[e] for e in edges))


# --- shared preprocessing -----------------------------------------------------

def _snap(w: float) -> float:
    return 0.0 if abs(w) <= TOL else float(w)


@dataclass
class _Reduced:
    nodes: list[int]
    edges: list[Pair]
    c: np.ndarray
    couplings: dict[Pair, tuple[int, int]]

    @property
    def n_branch(self):
        return len(self.nodes) + len(self.edges)


def _reduce(problem: WeightedSelectionProblem) -> _Reduced:
    # Edges of weight >= 0 never improve the objective and enable nothing,
    # so dropping them keeps every optimum. Zero weights are excluded.
    cmap = problem.coupling_map()
    edges = sorted(
        e for e, w in problem.edge_weights.items()
        if _snap(w) < 0 and not (problem.require_dag and e[0] == e[1])
    )
    needed = {n for e in edges if e in cmap for n in cmap[e]}
    nodes = sorted(n for n, w in problem.node_weights.items() if _snap(w) < 0 or n in needed)
    c = np.array([_snap(problem.node_weights[n]) for n in nodes]
                 + [_snap(problem.edge_weights[e]) for e in edges], dtype=float)
    return _Reduced(nodes, edges, c, {e: cmap[e] for e in edges if e in cmap})


def _finalize(problem, red: _Reduced, x: Optional[np.ndarray], certificate, stats) -> Selection:
    if x is None:
        nodes, edges = set(), set()
    else:
        k = len(red.nodes)
        nodes = {n for n, v in zip(red.nodes, x[:k]) if v > 0.5}
        edges = {e for e, v in zip(red.edges, x[k:k + len(red.edges)]) if v > 0.5}
    # drop nodes that cost >= 0 and support no selected edge
    used = {n for e in edges if e in red.couplings for n in red.couplings[e]}
    nodes = {n for n in nodes if _snap(problem.node_weights[n]) < 0 or n in used}
    obj = objective_value(problem, (nodes, edges))
    return Selection(frozenset(nodes), frozenset(edges), obj, certificate, stats)


# --- branch and bound ---------------------------------------------------------

class _Budget:
    def __init__(self, time_limit, node_limit):
        self.start = time.perf_counter()
        self.time_limit = time_limit
        self.node_limit = node_limit

    def exhausted(self, nodes_explored):
        if self.node_limit is not None and nodes_explored >= self.node_limit:
            return True
        return self.time_limit is not None and time.perf_counter() - self.start > self.time_limit


# HiGHS' default 1e-7 tolerances would round small weights to zero
_LP_OPTIONS = {"dual_feasibility_tolerance": 1e-10, "primal_feasibility_tolerance": 1e-10}


def _solve_lp(c, rows, rhs, lo, hi):
    A = sparse.csr_matrix(rows) if rows.shape[0] else None
    res = linprog(
        c,
        A_ub=A,
        b_ub=rhs if rows.shape[0] else None,
        bounds=np.column_stack([lo, hi]),
        method="highs",
        options=_LP_OPTIONS,
    )
    if res.status == 2:
        return None, np.inf
    if res.status != 0:
        raise RuntimeError(f"LP relaxation failed: {res.message}")
    return res.x, res.fun


def _branch_and_bound(
    c: np.ndarray,
    rows: sparse.spmatrix,
    rhs: np.ndarray,
    n_branch: int,
    separate: Optional[Callable[[np.ndarray], list[tuple[dict, float]]]] = None,
    time_limit: Optional[float] = None,
    node_limit: Optional[int] = None,
):
    """Depth-first LP branch and bound over [0,1] variables.

    Only the first ``n_branch`` variables must be integral. ``separate``
    receives an integral point and returns violated rows as
    ``({col: coef}, rhs)``; those rows join the global cut pool and the
    node is re-solved. The all-zero point is assumed feasible and serves
    as the first incumbent.
    """
    nvar = len(c)
    rows = sparse.lil_matrix(rows) if rows.shape[0] else sparse.lil_matrix((0, nvar))
    rhs = list(rhs)
    best_x, best_obj = np.zeros(nvar), 0.0
    budget = _Budget(time_limit, node_limit)
    stats = {"nodes": 0, "cuts": 0, "lp_solves": 0}
    if not np.any(c < 0):
        return best_x, best_obj, stats

    stack = [({},)]
    while stack:
        (fixed,) = stack.pop()
        if budget.exhausted(stats["nodes"]):
            raise SolverTimeoutError(
                f"branch and bound budget exhausted after {stats['nodes']} nodes",
                selection=(best_x, stats),
            )
        stats["nodes"] += 1
        lo, hi = np.zeros(nvar), np.ones(nvar)
        for j, v in fixed.items():
            lo[j] = hi[j] = v
        while True:
            stats["lp_solves"] += 1
            x, obj = _solve_lp(c, sparse.csr_matrix(rows), np.asarray(rhs, dtype=float), lo, hi)
            if x is None or obj >= best_obj - TOL:
                break
            frac = np.abs(x[:n_branch] - np.round(x[:n_branch]))
            if frac.max(initial=0.0) > INT_TOL:
                # most fractional variable; lowest index on ties
                j = int(np.argmax(frac))
                near = 1 if x[j] >= 0.5 else 0
                stack.append(({**fixed, j: 1 - near},))
                stack.append(({**fixed, j: near},))
                break
            xi = x.copy()
            xi[:n_branch] = np.round(xi[:n_branch])
            cuts = separate(xi) if separate is not None else []
            if not cuts:
                best_x, best_obj = xi, float(c[:n_branch] @ xi[:n_branch])
                break
            for coefs, b in cuts:
                row = sparse.lil_matrix((1, nvar))
                for col, v in coefs.items():
                    row[0, col] = v
                rows = sparse.vstack([rows, row], format="lil")
                rhs.append(b)
                stats["cuts"] += 1
    return best_x, best_obj, stats


def _timeout_selection(problem, red, exc: SolverTimeoutError):
    best_x, stats = exc.selection
    sel = _finalize(problem, red, best_x, HEURISTIC, dict(stats))
    exc.selection = sel
    return exc


# --- engines ----------------------------------------------------------------

def solve_transitive_closure(problem: WeightedSelectionProblem, time_limit=None,
                             node_limit=None) -> Selection:
    """Solve with materialised path indicators (O(n^3) transitivity rows).

    Raises
    ------
    SizeError
        If more than 60 nodes touch candidate edges.
    SolverTimeoutError
        If the budget runs out; ``exc.selection`` holds the incumbent.
    """
    red = _reduce(problem)
    k, m = len(red.nodes), len(red.edges)
    node_col = {n: i for i, n in enumerate(red.nodes)}
    edge_col = {e: k + i for i, e in enumerate(red.edges)}
    rows: list[dict[int, float]] = []
    rhs: list[float] = []

    # y_h + y_t - 2 x_e >= 0
    for e, (h, t) in red.couplings.items():
        rows.append({edge_col[e]: 2.0, node_col[h]: -1.0, node_col[t]: -1.0} if h != t
                    else {edge_col[e]: 2.0, node_col[h]: -2.0})
        rhs.append(0.0)

    nvar = k + m
    if problem.require_dag and m:
        verts = sorted({v for e in red.edges for v in e})
        if len(verts) > CLOSURE_MAX_NODES:
            raise SizeError(f"closure engine limited to {CLOSURE_MAX_NODES} nodes, got {len(verts)}")
        # b_(v,v) is fixed at 0 and therefore not materialised
        b_col = {p: nvar + i for i, p in enumerate(permutations(verts, 2))}
        nvar += len(b_col)
        for e in red.edges:
            rows.append({edge_col[e]: 1.0, b_col[e]: -1.0})
            rhs.append(0.0)
        for i, j, l in permutations(verts, 3):
            rows.append({b_col[(i, j)]: 1.0, b_col[(j, l)]: 1.0, b_col[(i, l)]: -1.0})
            rhs.append(1.0)
        # transitivity with l == i and b_ii = 0
        for i, j in b_col:
            if i < j:
                rows.append({b_col[(i, j)]: 1.0, b_col[(j, i)]: 1.0})
                rhs.append(1.0)

    c = np.zeros(nvar)
    c[:k + m] = red.c
    A = _rows_to_csr(rows, nvar)
    # Once x and y are integral an integral b exists (the transitive closure
    # of the chosen edges), so branching is restricted to x and y.
    try:
        x, _, stats = _branch_and_bound(c, A, np.array(rhs), k + m,
                                        time_limit=time_limit, node_limit=node_limit)
    except SolverTimeoutError as exc:
        raise _timeout_selection(problem, red, exc) from None
    stats["engine"] = "closure"
    return _finalize(problem, red, x, OPTIMAL, stats)


def solve_lazy_cycles(problem: WeightedSelectionProblem, time_limit=None,
                      node_limit=None) -> Selection:
    """Solve by branch and bound with cycle cuts added on demand.

    Raises
    ------
    SolverTimeoutError
        If the budget runs out; ``exc.selection`` holds the incumbent.
    """
    red = _reduce(problem)
    k, m = len(red.nodes), len(red.edges)
    node_col = {n: i for i, n in enumerate(red.nodes)}
    rows, rhs = [], []
    for idx, e in enumerate(red.edges):
        if e in red.couplings:
            for v in set(red.couplings[e]):
                rows.append({k + idx: 1.0, node_col[v]: -1.0})
                rhs.append(0.0)

    separate = None
    if problem.require_dag:
        def separate(xi):
            chosen = [e for e, v in zip(red.edges, xi[k:]) if v > 0.5]
            cycle = find_cycle(chosen)
            if cycle is None:
                return []
            cols = {k + red.edges.index(e): 1.0 for e in cycle}
            return [(cols, len(cycle) - 1.0)]

    try:
        x, _, stats = _branch_and_bound(red.c, _rows_to_csr(rows, k + m), np.array(rhs), k + m,
                                        separate=separate, time_limit=time_limit,
                                        node_limit=node_limit)
    except SolverTimeoutError as exc:
        raise _timeout_selection(problem, red, exc) from None
    stats["engine"] = "lazy"
    return _finalize(problem, red, x, OPTIMAL, stats)


def _rows_to_csr(rows, nvar):
    if not rows:
        return sparse.csr_matrix((0, nvar))
    data, ri, ci = [], [], []
    for r, coefs in enumerate(rows):
        for col, v in coefs.items():
            ri.append(r)
            ci.append(col)
            data.append(v)
    return sparse.csr_matrix((data, (ri, ci)), shape=(len(rows), nvar))


ENGINES = {"lazy": solve_lazy_cycles, "closure": solve_transitive_closure}


def solve(problem: WeightedSelectionProblem, engine: str = "lazy", **kwargs) -> Selection:
    try:
        fn = ENGINES[engine]
    except KeyError:
        raise ValueError(f"unknown engine {engine!r}; choose from {sorted(ENGINES)}") from None
    return fn(problem, **kwargs)


# --- oracle -----------------------------------------------------------------

def _simple_cycles(n_vertices: int, arcs: list[Pair]) -> list[list[int]]:
    """All simple directed cycles as lists of arc indices (self-loops included)."""
    out_arcs: dict[int, list[tuple[int, int]]] = {v: [] for v in range(n_vertices)}
    for idx, (h, t) in enumerate(arcs):
        out_arcs[h].append((t, idx))
    cycles = []
    for s in range(n_vertices):
        # cycles whose smallest vertex is s
        stack = [(s, [], {s})]
        while stack:
            v, path, seen = stack.pop()
            for t, idx in out_arcs[v]:
                if t == s:
                    cycles.append(path + [idx])
                elif t > s and t not in seen:
                    stack.append((t, path + [idx], seen | {t}))
    return cycles


def brute_force(problem: WeightedSelectionProblem) -> Selection:
    """Exhaustive optimum over all feasible selections.

    Weights within 1e-9 of zero count as zero, as in the exact engines.
    Among selections within 1e-9 of the optimum, returns the one with the
    fewest elements, then the lexicographically smallest sorted element
    index tuple (nodes are indexed first, in sorted order, then edges).

    Raises
    ------
    SizeError
        If the problem has more than 20 elements.
    """
    if problem.n_elements > BRUTE_FORCE_MAX_ELEMENTS:
        raise SizeError(f"brute force limited to {BRUTE_FORCE_MAX_ELEMENTS} elements")
    nodes = sorted(problem.node_weights)
    edges = sorted(problem.edge_weights)
    N, E = len(nodes), len(edges)
    nw = np.array([_snap(problem.node_weights[n]) for n in nodes], dtype=float)
    ew = np.array([_snap(problem.edge_weights[e]) for e in edges], dtype=float)

    emask = np.arange(1 << E, dtype=np.int64)
    nmask = np.arange(1 << N, dtype=np.int64)
    ebits = (emask[:, None] >> np.arange(E)) & 1
    nbits = (nmask[:, None] >> np.arange(N)) & 1
    eobj = ebits @ ew if E else np.zeros(1)
    nobj = nbits @ nw if N else np.zeros(1)

    # node bitmask each edge subset requires through couplings
    cmap = problem.coupling_map()
    nidx = {n: i for i, n in enumerate(nodes)}
    required = np.zeros(1 << E, dtype=np.int64)
    for j, e in enumerate(edges):
        if e in cmap:
            h, t = cmap[e]
            need = (1 << nidx[h]) | (1 << nidx[t])
            required |= np.where(ebits[:, j] == 1, need, 0)

    acyclic = np.ones(1 << E, dtype=bool)
    if problem.require_dag and E:
        verts = sorted({v for e in edges for v in e})
        vidx = {v: i for i, v in enumerate(verts)}
        arcs = [(vidx[h], vidx[t]) for h, t in edges]
        for cyc in _simple_cycles(len(verts), arcs):
            cm = sum(1 << i for i in cyc)
            acyclic &= (emask & cm) != cm

    feasible = acyclic[:, None] & ((required[:, None] & ~nmask[None, :]) == 0)
    total = eobj[:, None] + nobj[None, :]
    total = np.where(feasible, total, np.inf)
    best = total.min()
    cand = np.argwhere(total <= best + TOL)

    def chosen(ei, ni):
        return tuple([i for i in range(N) if ni >> i & 1] + [N + j for j in range(E) if ei >> j & 1])

    ei, ni = min(((int(a), int(b)) for a, b in cand), key=lambda p: (len(chosen(*p)), chosen(*p)))
    sel_nodes = frozenset(nodes[i] for i in range(N) if ni >> i & 1)
    sel_edges = frozenset(edges[j] for j in range(E) if ei >> j & 1)
    return Selection(sel_nodes, sel_edges, objective_value(problem, (sel_nodes, sel_edges)),
                     OPTIMAL, {"engine": "brute_force"})


# --- debugging dump ---------------------------------------------------------

def to_lp_format(problem: WeightedSelectionProblem) -> str:
    """CPLEX-LP style text of the closure formulation, for inspection."""
    def y(n):
        return f"y_{n}"

    def x(e):
        return f"x_{e[0]}_{e[1]}"

    def b(p):
        return f"b_{p[0]}_{p[1]}"

    def term(coef, var):
        return f"{'+' if coef >= 0 else '-'} {abs(coef):.12g} {var}"

    obj = [term(w, y(n)) for n, w in sorted(problem.node_weights.items())]
    obj += [term(w, x(e)) for e, w in sorted(problem.edge_weights.items())]
    lines = ["\\ weighted selection problem", "Minimize", " obj: " + (" ".join(obj) or "0"),
             "Subject To"]
    for i, (e, h, t) in enumerate(problem.couplings):
        lines.append(f" c{i}: {y(h)} + {y(t)} - 2 {x(e)} >= 0")
    binaries = [y(n) for n in sorted(problem.node_weights)] + [x(e) for e in sorted(problem.edge_weights)]
    if problem.require_dag and problem.edge_weights:
        verts = sorted({v for e in problem.edge_weights for v in e})
        for e in sorted(problem.edge_weights):
            lines.append(f" d_{e[0]}_{e[1]}: {x(e)} - {b(e)} <= 0")
        for i, j, l in permutations(verts, 3):
            lines.append(f" t_{i}_{j}_{l}: {b((i, l))} - {b((i, j))} - {b((j, l))} >= -1")
        for v in verts:
            lines.append(f" n_{v}: {b((v, v))} = 0")
        binaries += [b((i, j)) for i in verts for j in verts]
    lines += ["Binary", " " + " ".join(binaries), "End"]
    return "\n".join(lines) + "\n"
