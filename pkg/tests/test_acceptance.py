"""Acceptance criteria 1-10, each at its stated size and tolerance.

Every test records one ``criterion N: PASS|FAIL ...`` line; the lines are
printed as they happen and repeated in the pytest terminal summary.
Run alone with ``pytest tests/test_acceptance.py -v -s``.
"""

import functools
import json
import sys
import time
from fractions import Fraction

import numpy as np
import pytest

from conftest import CRITERIA
from graphmdl.aggregate import AggregationConfig, aggregate, aggregate_pool
from graphmdl.cli import check_manifest, main
from graphmdl.graph import Edge, Graph, Node, edge_multiset_f1, find_cycle, is_dag
from graphmdl.io import SampleSet, graph_from_dict, graph_to_dict
from graphmdl.metrics import (EXACT, HALF, component_f1, error_counts, graph_edit_distance,
                              match_relations, relation_f1, structural_accuracy, triple_f1)
from graphmdl.pipeline import node_recall
from graphmdl.pool import build_pool
from graphmdl.solver import WeightedSelectionProblem, brute_force, objective_value, solve
from graphmdl.synth import NoiseModel, corrupt, generate_truth, make_instance
from graphmdl.tuning import DEFAULT_GRID, LabeledInstance, tune

INNER = [round(0.1 * k, 1) for k in range(1, 10)]


def record(k, ok, detail):
    line = f"criterion {k}: {'PASS' if ok else 'FAIL'} - {detail}"
    CRITERIA[k] = line
    print(line)
    assert ok, line


# --- 1 ----------------------------------------------------------------------


def random_problem(rng):
    n = int(rng.integers(1, 8))
    pairs = [(h, t) for h in range(n) for t in range(n) if h != t]
    m = int(rng.integers(0, min(12, len(pairs)) + 1))
    chosen = [pairs[i] for i in sorted(rng.choice(len(pairs), m, replace=False))] if m else []
    node_w = {i: float(rng.uniform(-1, 1)) for i in range(n)}
    edge_w = {e: float(rng.uniform(-1, 1)) for e in chosen}
    return WeightedSelectionProblem(node_w, edge_w, [(e, e[0], e[1]) for e in chosen], True)


def test_criterion_1_solver_oracle_equivalence():
    rng = np.random.default_rng(1)
    start = time.perf_counter()
    worst = 0.0
    for _ in range(200):
        p = random_problem(rng)
        ref = brute_force(p).objective
        for engine in ("closure", "lazy"):
            sel = solve(p, engine)
            worst = max(worst, abs(objective_value(p, sel) - ref))
    elapsed = time.perf_counter() - start
    record(1, worst <= 1e-9 and elapsed < 60,
           f"200 instances, max |engine - brute force| = {worst:.2e}, {elapsed:.1f}s")


# --- 2 ----------------------------------------------------------------------


def test_criterion_2_closed_form_unconstrained():
    rng = np.random.default_rng(2)
    mismatches, ties = 0, 0
    for _ in range(1000):
        n = int(rng.integers(2, 6))
        T = int(rng.integers(1, 11))
        lam = float(rng.choice(INNER))
        contents = [f"node{i}" for i in range(n)]
        pairs = [(h, t) for h in range(n) for t in range(n) if h != t]
        rate = rng.uniform(0.1, 0.9, len(pairs))
        runs = []
        for _ in range(T):
            keep = [pr for pr, r in zip(pairs, rate) if rng.random() < r]
            runs.append(Graph([Node(i, c) for i, c in enumerate(contents)], [Edge(h, t) for h, t in keep]))
        cfg = AggregationConfig(lam, 0.5, variant="no_node_transforms", dag_constraints=False)
        out = aggregate(SampleSet(runs), cfg)
        got = {(h, t) for h, t, _ in out.edge_keys()}
        # exact rational oracle: keep e iff k/T > 1 - lambda1
        threshold = 1 - Fraction(str(lam))
        want = set()
        for h, t in pairs:
            k = sum(1 for r in runs if any(e.pair == (h, t) for e in r.edges))
            ties += Fraction(k, T) == threshold
            if Fraction(k, T) > threshold:
                want.add((contents[h], contents[t]))
        mismatches += got != want
    record(2, mismatches == 0, f"1000 problems, {mismatches} mismatches, {ties} exact ties excluded")


# --- 3 ----------------------------------------------------------------------


def test_criterion_3_dag_guarantee():
    rng = np.random.default_rng(3)
    cyclic_inputs, failures = 0, 0
    for i in range(1000):
        noise = NoiseModel(edge_delete_prob=0.3, edge_add_prob=float(rng.uniform(0.1, 0.5)),
                           content_paraphrase_prob=0.2, seed=i, allow_cycles=True)
        truth = generate_truth(int(rng.integers(3, 7)), 0.4, i)
        s = corrupt(truth, noise, int(rng.integers(1, 9)))
        pool = build_pool(s)
        cyclic_inputs += find_cycle([(e.head, e.tail) for e in pool.edges]) is not None
        cfg = AggregationConfig(float(rng.choice(INNER)), float(rng.choice(INNER)),
                                variant=str(rng.choice(["full", "equal_lambda", "no_node_transforms"])))
        failures += not is_dag(aggregate_pool(pool, cfg)[0])
    record(3, failures == 0,
           f"1000 aggregations, {failures} cyclic outputs ({cyclic_inputs} pools had cycles)")


# --- 4 ----------------------------------------------------------------------


def test_criterion_4_identity_recovery():
    bad, runs = 0, 0
    for seed in range(50):
        truth = generate_truth(8, 0.35, seed)
        for T in (1, 5, 10):
            pool = build_pool(corrupt(truth, NoiseModel(seed=seed), T))
            for l1 in INNER:
                for l2 in INNER:
                    out, _ = aggregate_pool(pool, AggregationConfig(l1, l2))
                    runs += 1
                    bad += edge_multiset_f1(out, truth) != 1.0 or node_recall(out, truth) != 1.0
    record(4, bad == 0, f"{runs} zero-noise aggregations, {bad} differ from truth")


# --- 5 and 7 ------------------------------------------------------------------

BENCH_NOISE = NoiseModel(edge_delete_prob=0.3, edge_add_prob=0.05, content_paraphrase_prob=0.2)


@functools.lru_cache(maxsize=None)
def benchmark():
    """Tuned lambdas on 5 held-out instances, then 100 evaluation seeds."""
    start = time.perf_counter()
    held_out = [LabeledInstance(s, t) for t, s in
                (make_instance(8, 0.35, BENCH_NOISE, 10, 10_000 + i) for i in range(5))]
    tuned = tune(held_out)
    cfg = AggregationConfig(tuned.best_lambda1, tuned.best_lambda2)
    rows = []
    for seed in range(100):
        truth, s50 = make_instance(8, 0.35, BENCH_NOISE, 50, seed)
        row = {"baseline": s50[0], "truth": truth}
        for T in (5, 10, 50):
            row[T] = aggregate(SampleSet(s50.samples[:T]), cfg)
        rows.append(row)
    return tuned, rows, time.perf_counter() - start


def test_criterion_5_self_consistency():
    tuned, rows, elapsed = benchmark()
    f1 = {k: np.array([edge_multiset_f1(r[k], r["truth"]) for r in rows]) for k in ("baseline", 5, 10, 50)}
    improved = float(np.mean(f1[10] > f1["baseline"]))
    ok = f1[10].mean() > f1["baseline"].mean() and improved >= 0.8 and f1[50].mean() >= f1[5].mean()
    record(5, ok and elapsed < 300,
           f"lambda=({tuned.best_lambda1}, {tuned.best_lambda2}); edge-F1 T=10 {f1[10].mean():.3f} vs "
           f"single sample {f1['baseline'].mean():.3f}, improved on {improved:.0%} of seeds; "
           f"T=5 {f1[5].mean():.3f}, T=50 {f1[50].mean():.3f}; {elapsed:.0f}s")


def test_criterion_7_error_categories():
    _, rows, _ = benchmark()
    ours = [error_counts(r[10], r["truth"]) for r in rows]
    base = [error_counts(r["baseline"], r["truth"]) for r in rows]
    means = {k: (np.mean([c[k] for c in ours]), np.mean([c[k] for c in base]))
             for k in ("spurious_edges", "omitted_edges", "reversed_edges")}
    ok = all(means[k][0] <= means[k][1] for k in ("spurious_edges", "omitted_edges"))
    detail = ", ".join(f"{k} {a:.2f} vs {b:.2f}" for k, (a, b) in means.items())
    record(7, ok, f"mean counts consensus vs single sample over 100 seeds: {detail}")


# --- 6 ----------------------------------------------------------------------


def test_criterion_6_equal_lambda_degeneracy():
    noise = NoiseModel(edge_delete_prob=0.9, edge_add_prob=0.05)
    max_p, nonempty = 0.0, 0
    for seed in range(100):
        truth, s = make_instance(6, 0.5, noise, 20, seed)
        pool = build_pool(s)
        max_p = max([max_p] + [pool.edge_probability((e.head, e.tail)) for e in pool.edges])
        out, _ = aggregate_pool(pool, AggregationConfig(0.9, 0.9, variant="equal_lambda"))
        nonempty += bool(out.edges)
    ok = max_p < 0.5 and nonempty == 0
    record(6, ok, f"100 seeds, max edge p = {max_p:.2f}, {nonempty} non-empty edge sets")


# --- 8 ----------------------------------------------------------------------


def fixed_metric_examples():
    """(name, ok) for each fixed eval-metrics example."""
    out = []
    chain = Graph([Node(i, c) for i, c in enumerate("abcd")], [Edge(0, 1), Edge(1, 2), Edge(2, 3)])
    short = Graph(chain.nodes, chain.edges[:2])
    out.append(("edge F1 identity", edge_multiset_f1(chain, chain) == 1.0))
    out.append(("edge F1 2 of 3", abs(edge_multiset_f1(short, chain) - 0.8) < 1e-12))

    def spans(ss):
        return Graph([Node(i, f"c{i}", "P", s) for i, s in enumerate(ss)])

    gold_sp = spans([(0, 3), (4, 6), (8, 10)])
    out.append(("component identity", tuple(component_f1(gold_sp, gold_sp)) == (1.0, 1.0, 1.0)))
    p, r, f = component_f1(spans([(0, 3), (4, 6), (11, 12)]), gold_sp)
    out.append(("component 2/3", max(abs(p - 2 / 3), abs(r - 2 / 3), abs(f - 2 / 3)) < 1e-12))
    out.append(("component empty prediction", tuple(component_f1(Graph(), gold_sp)) == (0.0, 0.0, 0.0)))

    head = "cloning will be beneficial for many people"
    gold = Graph([Node(0, head, "P", (0, 7)), Node(1, "t", "C", (10, 13))], [Edge(0, 1, "support")])
    pred = Graph([Node(0, "beneficial for many people", "P", (3, 7)), Node(1, "t", "C", (10, 13))],
                 [Edge(0, 1, "support")])
    out.append(("relation identity", relation_f1(gold, gold, EXACT) == relation_f1(gold, gold, HALF) == 1.0))
    out.append(("R50 4/7 overlap", match_relations(pred, gold, HALF) == [(0, 0)]
                and match_relations(pred, gold, EXACT) == []))
    rev = Graph(gold.nodes, [Edge(1, 0, "support")])
    out.append(("reversed edge", relation_f1(rev, gold, EXACT) == relation_f1(rev, gold, HALF) == 0.0
                and error_counts(rev, gold)["reversed_edges"] == 1))

    belief, argument = "Factory farming should not be banned.", "Factory farming feeds millions."
    expl = Graph([Node(0, "factory farming"), Node(1, "feeds millions"), Node(2, "not be banned")],
                 [Edge(0, 1), Edge(1, 2)])
    out.append(("StCA valid", structural_accuracy(expl, belief, argument) == 1))
    cyc = Graph(expl.nodes, [Edge(0, 1), Edge(1, 2), Edge(2, 0)])
    out.append(("StCA cyclic", structural_accuracy(cyc, belief, argument) == 0))

    out.append(("GED identity", graph_edit_distance(chain, chain) == 0.0))
    out.append(("GED chain minus edge", graph_edit_distance(short, chain, normalize=False) == 1
                and abs(graph_edit_distance(short, chain) - 1 / 13) < 1e-12))
    other = Graph([Node(0, "x"), Node(1, "y")], [Edge(0, 1)])
    out.append(("GED disjoint", graph_edit_distance(other, chain) == 1.0))

    triples = [("Mermaid Train song", "genre", "Pop rock"), ("Mermaid Train song", "genre", "Reggae"),
               ("Pop rock", "stylistic Origin", "Rock music"), ("Reggae", "stylistic Origin", "Ska")]

    def tg(ts):
        names = list(dict.fromkeys(x for h, _, t in ts for x in (h, t)))
        return Graph([Node(i, x) for i, x in enumerate(names)],
                     [Edge(names.index(h), names.index(t), r) for h, r, t in ts])

    out.append(("triple identity", triple_f1(tg(triples), tg(triples)) == (1.0, 1)))
    f3, g3 = triple_f1(tg(triples[:3]), tg(triples))
    out.append(("triple 3 of 4", abs(f3 - 6 / 7) < 1e-12 and g3 == 0))
    out.append(("triple empty", triple_f1(Graph(), tg(triples)) == (0.0, 0)))
    return out


def random_typed_graph(rng, vocab):
    n = int(rng.integers(0, 7))
    names = list(rng.choice(vocab, n, replace=False))
    nodes = [Node(i, str(c), str(rng.choice(["", "A"]))) for i, c in enumerate(names)]
    pairs = [(h, t) for h in range(n) for t in range(n)]
    k = int(rng.integers(0, min(len(pairs), 8) + 1))
    idx = rng.choice(len(pairs), k, replace=False) if k else []
    return Graph(nodes, [Edge(*pairs[i], str(rng.choice(["", "x"]))) for i in idx])


def random_span_graph(rng):
    n = int(rng.integers(0, 5))
    cuts = np.sort(rng.choice(40, 2 * n, replace=False))
    nodes = [Node(i, f"c{i}", str(rng.choice(["P", "C"])), (int(cuts[2 * i]), int(cuts[2 * i + 1])))
             for i in range(n)]
    pairs = [(h, t) for h in range(n) for t in range(n) if h != t]
    k = int(rng.integers(0, min(len(pairs), 6) + 1))
    idx = rng.choice(len(pairs), k, replace=False) if k else []
    return Graph(nodes, [Edge(*pairs[i], str(rng.choice(["s", "a"]))) for i in idx])


def test_criterion_8_metric_calibration():
    examples = fixed_metric_examples()
    failed = [name for name, ok in examples if not ok]
    rng = np.random.default_rng(8)
    vocab = np.array(list("abcdefgh"))
    ged_bad = sum(graph_edit_distance(a, b, "greedy") < graph_edit_distance(a, b, "exact") - 1e-12
                  for a, b in ((random_typed_graph(rng, vocab), random_typed_graph(rng, vocab))
                               for _ in range(200)))
    subset_bad = 0
    for _ in range(200):
        p, gd = random_span_graph(rng), random_span_graph(rng)
        subset_bad += not set(match_relations(p, gd, EXACT)) <= set(match_relations(p, gd, HALF))
    ok = not failed and ged_bad == 0 and subset_bad == 0
    record(8, ok, f"{len(examples) - len(failed)}/{len(examples)} fixed examples exact"
                  f"{' (failed: ' + ', '.join(failed) + ')' if failed else ''}; greedy < exact GED on "
                  f"{ged_bad}/200 pairs; R100 not within R50 on {subset_bad}/200 pairs")


# --- 9 ----------------------------------------------------------------------


def sweep_oracle(instances, grid):
    surface = {}
    for l1 in grid:
        for l2 in grid:
            scores = [edge_multiset_f1(aggregate(i.samples, AggregationConfig(l1, l2)), i.gold)
                      for i in instances]
            surface[(l1, l2)] = sum(scores) / len(scores)
    top = max(surface.values())
    best = min(pair for pair, v in surface.items() if v >= top - 1e-12)
    return best, surface


def test_criterion_9_tuner_consistency():
    rng = np.random.default_rng(9)
    grid = list(DEFAULT_GRID)
    agree, max_dev = 0, 0.0
    for k in range(10):
        noise = NoiseModel(edge_delete_prob=float(rng.uniform(0.1, 0.6)),
                           edge_add_prob=float(rng.uniform(0.0, 0.15)),
                           content_paraphrase_prob=float(rng.uniform(0.0, 0.3)))
        instances = [LabeledInstance(s, t) for t, s in
                     (make_instance(int(rng.integers(4, 7)), 0.4, noise, int(rng.integers(3, 8)),
                                    1000 * k + j) for j in range(3))]
        res = tune(instances, grid)
        best, surface = sweep_oracle(instances, grid)
        agree += (res.best_lambda1, res.best_lambda2) == best
        max_dev = max(max_dev, max(abs(res.score_surface[p] - v) for p, v in surface.items()))
    record(9, agree == 10 and max_dev <= 1e-12,
           f"tune() matched the exhaustive sweep on {agree}/10 sets, max surface deviation {max_dev:.1e}")


# --- 10 ---------------------------------------------------------------------


def random_graph(rng):
    n = int(rng.integers(0, 9))
    alphabet = list("abcdefgh éü\"\\\n\t中")
    nodes = []
    for i in range(n):
        text = "x" + "".join(rng.choice(alphabet, int(rng.integers(0, 12))))
        span = None
        if rng.random() < 0.5:
            s = int(rng.integers(0, 50))
            span = (s, s + int(rng.integers(1, 10)))
        nodes.append(Node(int(rng.integers(0, 1000)) * 10 + i, text, str(rng.choice(["", "Claim"])), span))
    ids = [nd.id for nd in nodes]
    pairs = [(h, t) for h in ids for t in ids]
    k = int(rng.integers(0, min(len(pairs), 12) + 1))
    idx = rng.choice(len(pairs), k, replace=False) if k else []
    edges = [Edge(*pairs[j], str(rng.choice(["", "support", "attack"]))) for j in idx]
    return Graph(nodes, edges, {"source": "random", "n": n})


def test_criterion_10_determinism_and_round_trip(tmp_path):
    cfg = tmp_path / "pipe.json"
    cfg.write_text(json.dumps({
        "nodes": 6, "t_values": [1, 5], "n_seeds": 4,
        "noise": {"edge_delete_prob": 0.3, "edge_add_prob": 0.05, "content_paraphrase_prob": 0.2},
        "metrics": ["edge_f1", "node_recall", "spurious_edges", "ged"],
    }))
    out = tmp_path / "run"
    code = main(["pipeline", "--config", str(cfg), "--out", str(out)])
    replay_ok = code == 0 and check_manifest(out / "manifest.json")
    again = tmp_path / "again"
    main(["pipeline", "--config", str(cfg), "--out", str(again)])
    bytes_ok = all((out / f).read_bytes() == (again / f).read_bytes() for f in ("results.csv", "summary.csv"))

    rng = np.random.default_rng(10)
    trip_bad = 0
    for _ in range(1000):
        gr = random_graph(rng)
        back = graph_from_dict(json.loads(json.dumps(graph_to_dict(gr))))
        trip_bad += back != gr or back.meta != gr.meta
    record(10, replay_ok and bytes_ok and trip_bad == 0,
           f"pipeline manifest replay {'matches' if replay_ok else 'differs'}, repeat run "
           f"{'byte-identical' if bytes_ok else 'differs'}; {1000 - trip_bad}/1000 graphs round-trip")


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-v", "-s"]))
