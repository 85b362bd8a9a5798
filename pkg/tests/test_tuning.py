import pytest

from conftest import g, samples
from graphmdl.aggregate import AggregationConfig, aggregate
from graphmdl.exceptions import ConfigError
from graphmdl.graph import edge_multiset_f1
from graphmdl.synth import NoiseModel, make_instance
from graphmdl.tuning import (DEFAULT_GRID, LabeledInstance, LambdaTuner, TuneResult, argmax_surface,
                             parse_grid, score_surface_csv, tune)


def noisy_instances(n=3, delete=0.5):
    noise = NoiseModel(edge_delete_prob=delete, edge_add_prob=0.05)
    return [LabeledInstance(s, t) for t, s in
            (make_instance(5, 0.5, noise, 5, 40 + i) for i in range(n))]


def test_parse_grid():
    assert parse_grid("0:1:0.1") == list(DEFAULT_GRID)
    assert parse_grid("0.3,0.5") == [0.3, 0.5]
    with pytest.raises(ConfigError):
        parse_grid("0:1:0")
    with pytest.raises(ConfigError):
        parse_grid("a,b")


def test_all_tied_picks_minimum():
    surface = {(a, b): 0.5 for a in (0.2, 0.4) for b in (0.1, 0.3)}
    assert argmax_surface(surface) == (0.2, 0.1)


def test_tie_breaks_on_lambda1_then_lambda2():
    surface = {(0.1, 0.9): 0.7, (0.2, 0.0): 0.7, (0.1, 0.5): 0.7, (0.0, 0.0): 0.6}
    assert argmax_surface(surface) == (0.1, 0.5)


def test_exact_copies_score_one():
    gold = g(["a", "b", "c"], [(0, 1), (1, 2)])
    inst = [LabeledInstance(samples(gold, gold), gold) for _ in range(2)]
    res = tune(inst, [0.0, 0.5, 1.0])
    assert all(res.score_surface[(a, b)] == 1.0 for a in (0.5, 1.0) for b in (0.5, 1.0))
    # lambda1 = 0 selects nothing
    assert res.score_surface[(0.0, 0.5)] == 0.0
    assert (res.best_lambda1, res.best_lambda2) == (0.5, 0.0)


def test_tune_returns_surface_argmax_and_reproducible_scores():
    inst = noisy_instances()
    res = tune(inst, [0.2, 0.5, 0.8])
    assert (res.best_lambda1, res.best_lambda2) == argmax_surface(res.score_surface)
    for (l1, l2), score in res.score_surface.items():
        scores = [edge_multiset_f1(aggregate(i.samples, AggregationConfig(l1, l2)), i.gold) for i in inst]
        assert score == pytest.approx(sum(scores) / len(scores), abs=1e-12)
    assert tune(inst, [0.2, 0.5, 0.8]).score_surface == res.score_surface


def test_tune_preconditions():
    inst = noisy_instances(2)
    with pytest.raises(ConfigError):
        tune(inst[:1])
    with pytest.raises(ConfigError):
        tune(inst, [])
    with pytest.raises(ConfigError):
        tune(inst, metric="bleu")


def test_surface_csv(tmp_path):
    res = TuneResult(0.0, 0.0, {(a, b): 0.5 for a in DEFAULT_GRID for b in DEFAULT_GRID})
    score_surface_csv(res, tmp_path / "s.csv")
    lines = (tmp_path / "s.csv").read_text().splitlines()
    assert lines[0] == "lambda1,lambda2,score" and len(lines) == 122
    score_surface_csv(TuneResult(0.0, 0.0, {}), tmp_path / "e.csv")
    assert (tmp_path / "e.csv").read_text() == "lambda1,lambda2,score\n"
    score_surface_csv(res, tmp_path / "again.csv")
    assert (tmp_path / "again.csv").read_bytes() == (tmp_path / "s.csv").read_bytes()


def test_lambda_tuner_estimator():
    inst = noisy_instances()
    X, y = [i.samples for i in inst], [i.gold for i in inst]
    est = LambdaTuner(grid=[0.2, 0.5, 0.8]).fit(X, y)
    res = tune(inst, [0.2, 0.5, 0.8])
    assert (est.best_lambda1_, est.best_lambda2_) == (res.best_lambda1, res.best_lambda2)
    assert len(est.predict(X)) == 3
    assert est.get_params()["metric"] == "edge_f1"
