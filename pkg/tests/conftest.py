import os
import random

import pytest

from rulecover.dataset import BinaryDataset
from rulecover.objective import Hyperparams, Rule, RuleSet
from rulecover.subproblem import build_instance

MUSHROOM_PATH = os.environ.get("RULECOVER_MUSHROOM", "data/agaricus-lepiota.data")

needs_mushroom = pytest.mark.skipif(
    not os.path.exists(MUSHROOM_PATH),
    reason=(
        "mushroom data file not found; place the classic 8124-row file at "
        f"{MUSHROOM_PATH!r} or point RULECOVER_MUSHROOM at it"
    ),
)


def random_dataset(
    rng: random.Random,
    n: int,
    d: int,
    density: float = 0.5,
    pos_frac: float = 0.5,
) -> BinaryDataset:
    rows = [[int(rng.random() < density) for _ in range(d)] for _ in range(n)]
    labels = [int(rng.random() < pos_frac) for _ in range(n)]
    return BinaryDataset.from_matrix(rows, labels)


def random_hyperparams(rng: random.Random, max_rules: int = 4) -> Hyperparams:
    beta2 = rng.choice([0.0, 0.01, 0.1, 0.25, 0.5])
    beta1 = (1.72 * beta2 if beta2 else 0.0) + rng.uniform(0.05, 2.0)
    return Hyperparams(
        beta0=rng.uniform(0.0, 2.0),
        beta1=beta1,
        beta2=beta2,
        lam=rng.choice([0.0, 0.1, 0.5, 1.0, 2.0]),
        max_rules=max_rules,
        active_size=16,
    )


def random_instance(rng: random.Random, n_max: int = 40, d_max: int = 10):
    n = rng.randint(4, n_max)
    d = rng.randint(2, d_max)
    data = random_dataset(rng, n, d, density=rng.uniform(0.3, 0.8))
    h = random_hyperparams(rng)
    S = RuleSet()
    if rng.random() < 0.5 and data.d >= 2:
        feats = sorted(rng.sample(range(data.d), rng.randint(1, 2)))
        S.add(Rule.build(feats, data))
    alpha = rng.uniform(0.37, 1.0)
    return build_instance(S, data, h, alpha), data, h, S, alpha


def random_rule_features(rng: random.Random, d: int, k_max: int = 4) -> tuple[int, ...]:
    k = rng.randint(0, min(k_max, d))
    return tuple(sorted(rng.sample(range(d), k)))


def ref_rule_value(features, inst) -> float:
    """Slow v(R): per-sample weights against an explicit subset check."""
    weights = inst.sample_weights()
    total = -inst.lam * len(features)
    for i in range(inst.n):
        if all(inst.columns[j] >> i & 1 for j in features):
            total += weights[i]
    return total


def enumerate_rule_optimum(inst) -> tuple[tuple[int, ...], float]:
    """Best rule over the whole ground set by exhaustive subset search."""
    import itertools

    best, best_v = (), inst.value(())
    for k in range(1, inst.d + 1):
        for feats in itertools.combinations(range(inst.d), k):
            v = inst.value(feats)
            if v > best_v + 1e-12:
                best, best_v = feats, v
    return best, best_v
