"""Tests for the distorted greedy trainer, refinement, and prediction."""

import math
import random

import pytest

from conftest import random_dataset, random_hyperparams
from rulecover.dataset import BinaryDataset, binarize
from rulecover.datasets import table_three_tic_tac_toe_rules, tic_tac_toe
from rulecover.exact_oracle import brute_force_ruleset_opt
from rulecover.learner import (
    SUBPROBLEM_MODES,
    TrainConfig,
    _alpha,
    distorted_greedy,
    predict,
    predict_dataset,
    refine,
    train,
)
from rulecover.objective import ConfigError, Hyperparams, RuleSet, metrics, profit


def test_alpha_schedule_shape():
    K = 8
    values = [_alpha(k, K) for k in range(1, K + 1)]
    assert values[0] == pytest.approx(0.875**7)
    assert values[0] == pytest.approx(0.3927, abs=5e-5)
    assert values[-1] == 1.0
    for a, b in zip(values, values[1:]):
        assert b > a


def test_alpha_schedule_single_step_is_undistorted():
    # 0^0 is taken as 1, so K = 1 runs one plain greedy step
    assert _alpha(1, 1) == 1.0


def test_train_config_validation():
    for mode in SUBPROBLEM_MODES:
        TrainConfig(subproblem=mode)
    with pytest.raises(ConfigError):
        TrainConfig(subproblem="exact")
    with pytest.raises(ConfigError):
        TrainConfig(ds_restarts=0)
    with pytest.raises(ConfigError):
        TrainConfig(time_limit=0.0)


def test_greedy_respects_rule_budget():
    rng = random.Random(1)
    for _ in range(20):
        data = random_dataset(rng, n=30, d=7)
        h = random_hyperparams(rng, max_rules=rng.randint(1, 4))
        S, report = distorted_greedy(data, TrainConfig(hyperparams=h))
        assert len(S) <= h.max_rules
        assert len(report.iterations) == h.max_rules


def test_greedy_report_profits_match_recomputation():
    rng = random.Random(2)
    for _ in range(20):
        data = random_dataset(rng, n=30, d=7)
        h = random_hyperparams(rng)
        S, report = distorted_greedy(data, TrainConfig(hyperparams=h))
        assert report.greedy_profit == pytest.approx(profit(S, data, h), abs=1e-9)
        running = RuleSet()
        for rec in report.iterations:
            assert rec.phase == "greedy"
            if rec.inserted:
                from rulecover.objective import Rule

                running.add(Rule.build(rec.rule, data))
            assert rec.profit_after == pytest.approx(profit(running, data, h), abs=1e-9)


def test_greedy_is_deterministic():
    rng = random.Random(3)
    data = random_dataset(rng, n=40, d=9)
    h = random_hyperparams(rng)
    cfg = TrainConfig(hyperparams=h, seed=7)
    S1, r1 = distorted_greedy(data, cfg)
    S2, r2 = distorted_greedy(data, cfg)
    assert S1.feature_sets() == S2.feature_sets()
    assert [rec.as_dict() for rec in r1.iterations] == [
        rec.as_dict() for rec in r2.iterations
    ]


def test_greedy_without_positives_learns_nothing():
    rng = random.Random(4)
    data = random_dataset(rng, n=20, d=5, pos_frac=0.0)
    S, _ = distorted_greedy(data, TrainConfig())
    assert len(S) == 0
    assert predict_dataset(S, data) == [0] * data.n


def test_greedy_profit_never_negative():
    # insertion requires a strictly positive distorted value, so the
    # learned set is never worse than predicting all zeros
    rng = random.Random(5)
    for _ in range(30):
        data = random_dataset(rng, n=25, d=6, pos_frac=rng.random())
        h = random_hyperparams(rng)
        S, report = distorted_greedy(data, TrainConfig(hyperparams=h))
        assert report.greedy_profit >= -1e-9


def test_exact_mode_rejects_wide_instances():
    rng = random.Random(6)
    data = random_dataset(rng, n=20, d=30)
    with pytest.raises(ConfigError, match="bnb-timed"):
        distorted_greedy(data, TrainConfig(subproblem="bnb"))
    distorted_greedy(data, TrainConfig(subproblem="bnb-timed", time_limit=0.5))


def test_exact_mode_satisfies_greedy_guarantee_quickly():
    rng = random.Random(7)
    factor = 1 - 1 / math.e
    for _ in range(25):
        data = random_dataset(rng, n=20, d=5, pos_frac=0.5)
        h = random_hyperparams(rng, max_rules=2)
        cfg = TrainConfig(hyperparams=h, subproblem="bnb", refine=False)
        S, report = distorted_greedy(data, cfg)
        opt_set, opt_v = brute_force_ruleset_opt(data, h)
        gain = (h.beta1 + h.beta2) * (opt_set.covered & data.positives).bit_count()
        cost = gain - opt_v
        assert report.greedy_profit >= factor * gain - cost - 1e-9


def test_refine_never_lowers_profit():
    rng = random.Random(8)
    for _ in range(30):
        data = random_dataset(rng, n=35, d=8)
        h = random_hyperparams(rng)
        cfg = TrainConfig(hyperparams=h)
        S, report = distorted_greedy(data, cfg)
        refined = refine(S, data, cfg, report)
        assert report.final_profit >= report.greedy_profit - 1e-9
        assert report.final_profit == pytest.approx(profit(refined, data, h), abs=1e-9)
        assert len(refined) <= h.max_rules


def test_refine_profit_trace_is_monotone():
    rng = random.Random(9)
    for _ in range(20):
        data = random_dataset(rng, n=30, d=7)
        h = random_hyperparams(rng)
        cfg = TrainConfig(hyperparams=h)
        S, report = train(data, cfg)
        profits = [
            rec.profit_after
            for rec in report.iterations
            if rec.phase.startswith("refine")
        ]
        for a, b in zip(profits, profits[1:]):
            assert b >= a - 1e-9


def test_train_matches_greedy_plus_refine():
    rng = random.Random(10)
    data = random_dataset(rng, n=30, d=7)
    h = random_hyperparams(rng)
    cfg = TrainConfig(hyperparams=h, seed=3)
    S_all, rep_all = train(data, cfg)
    S_g, rep_g = distorted_greedy(data, cfg)
    S_r = refine(S_g, data, cfg)
    assert sorted(S_all.feature_sets()) == sorted(S_r.feature_sets())
    assert rep_all.final_profit == pytest.approx(profit(S_r, data, h), abs=1e-9)


def test_train_without_refine_keeps_greedy_result():
    rng = random.Random(11)
    data = random_dataset(rng, n=30, d=7)
    cfg = TrainConfig(refine=False)
    S, report = train(data, cfg)
    assert report.final_profit == report.greedy_profit
    assert report.refine_passes == 0


def test_report_timing_fields():
    rng = random.Random(12)
    data = random_dataset(rng, n=30, d=7)
    S, report = train(data, TrainConfig())
    assert report.greedy_seconds >= 0.0
    assert report.refine_seconds >= 0.0
    assert report.fit_seconds == report.greedy_seconds + report.refine_seconds
    assert report.refine_passes >= 1
    assert report.all_proven


def test_predict_on_hand_rows():
    sets = [(0, 2), (3,)]
    assert predict(sets, [1, 0, 1, 0]) == 1
    assert predict(sets, [1, 1, 0, 0]) == 0
    assert predict(sets, [0, 0, 0, 1]) == 1
    assert predict([], [1, 1, 1, 1]) == 0
    assert predict([()], [0, 0, 0, 0]) == 1


def test_predict_dataset_matches_per_row_predict():
    rng = random.Random(13)
    for _ in range(20):
        data = random_dataset(rng, n=25, d=6)
        sets = []
        for _ in range(rng.randint(0, 3)):
            k = rng.randint(1, 3)
            feats = tuple(sorted(rng.sample(range(data.d), k)))
            if feats not in sets:
                sets.append(feats)
        preds = predict_dataset(sets, data)
        for i in range(data.n):
            assert preds[i] == predict(sets, data.row_bits(i))


def test_perfect_play_rules_predict_perfectly():
    table, schema = tic_tac_toe()
    data = binarize(table, schema)
    sets = table_three_tic_tac_toe_rules(data.feature_names())
    preds = predict_dataset(sets, data)
    labels = [(data.labels >> i) & 1 for i in range(data.n)]
    assert preds == labels


def test_trained_model_beats_majority_on_separable_data():
    # one planted conjunction decides the label; training must find it
    rng = random.Random(14)
    rows = [[int(rng.random() < 0.5) for _ in range(6)] for _ in range(80)]
    labels = [int(r[1] == 1 and r[4] == 1) for r in rows]
    data = BinaryDataset.from_matrix(rows, labels)
    h = Hyperparams(beta2=0.0, lam=0.1, max_rules=4)
    S, _ = train(data, TrainConfig(hyperparams=h))
    assert S.feature_sets() == [(1, 4)]
    assert metrics(S, data).accuracy == 1.0
