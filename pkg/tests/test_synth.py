import numpy as np
import pytest

from graphmdl.exceptions import ConfigError
from graphmdl.graph import is_dag
from graphmdl.pool import build_pool
from graphmdl.synth import NoiseModel, corrupt, generate_truth, make_instance


def test_truth_edge_cases():
    one = generate_truth(1, 0.5, 0)
    assert len(one.nodes) == 1 and not one.edges
    full = generate_truth(6, 1.0, 0)
    assert len(full.edges) == 15 and is_dag(full)
    assert generate_truth(6, 0.3, 42) == generate_truth(6, 0.3, 42)
    with pytest.raises(ConfigError):
        generate_truth(0, 0.5)
    with pytest.raises(ConfigError):
        generate_truth(3, 1.5)


def test_truth_contents_share_no_tokens():
    truth = generate_truth(30, 0.2, 7)
    seen = set()
    for n in truth.nodes:
        toks = set(n.content.split())
        assert not toks & seen
        seen |= toks


def test_zero_noise_copies():
    truth = generate_truth(6, 0.4, 1)
    s = corrupt(truth, NoiseModel(), 4)
    assert s.T == 4 and all(x == truth for x in s)


def test_delete_all_nodes():
    s = corrupt(generate_truth(5, 0.5, 1), NoiseModel(node_delete_prob=1.0), 3)
    assert all(not x.nodes and not x.edges for x in s)


def test_samples_stay_acyclic():
    truth = generate_truth(7, 0.4, 2)
    s = corrupt(truth, NoiseModel(edge_delete_prob=0.2, edge_add_prob=0.3, seed=2), 20)
    assert all(is_dag(x) for x in s)
    cyc = corrupt(truth, NoiseModel(edge_add_prob=0.5, seed=2, allow_cycles=True), 20)
    assert not all(is_dag(x) for x in cyc)


def test_samples_nested_across_t():
    truth = generate_truth(6, 0.5, 3)
    noise = NoiseModel(edge_delete_prob=0.3, content_paraphrase_prob=0.3, seed=9)
    assert corrupt(truth, noise, 10).samples[:5] == corrupt(truth, noise, 5).samples


def test_edge_survival_mean():
    # binomial mean 10 * 0.7 = 7 surviving copies per edge
    truth = generate_truth(2, 1.0, 0)
    counts = [sum(len(x.edges) for x in corrupt(truth, NoiseModel(edge_delete_prob=0.3, seed=s), 10))
              for s in range(1000)]
    assert abs(np.mean(counts) - 7.0) <= 0.5


def test_pool_probability_converges():
    # at T=200 each true edge's p estimate lies within 3 sigma of 1 - q
    q, T = 0.3, 200
    truth, s = make_instance(6, 0.5, NoiseModel(edge_delete_prob=q), T, 11)
    pool = build_pool(s)
    sigma = np.sqrt(q * (1 - q) / T)
    for e in truth.edges:
        assert abs(pool.edge_probability(e.pair) - (1 - q)) <= 3 * sigma


def test_noise_validation():
    with pytest.raises(ConfigError):
        NoiseModel(edge_delete_prob=-0.1)
    with pytest.raises(ConfigError):
        NoiseModel.from_dict({"edge_drop": 0.1})
    d = NoiseModel(edge_add_prob=0.1).to_dict()
    assert NoiseModel.from_dict(d) == NoiseModel(edge_add_prob=0.1)
