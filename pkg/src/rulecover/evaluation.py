"""Cross-validation, grid search, and approximation-gap experiments.

Folds are stratified by default: each class is shuffled separately under
the seed and dealt round-robin, so per-fold class counts differ by at
most one. Binarization happens inside each fold on the training split
only; test rows are encoded with the trained descriptors, so cut points
and category lists never leak.

Grid selection follows mean training-split accuracy with ties broken by
fewer literals. relative_gap trains the same configuration twice, with
the local-search and the (optionally time-limited) branch-and-bound
subproblem solvers, and reports [V_bnb - V_approx] / V_bnb.
"""

from __future__ import annotations

import math
import random
import statistics
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Sequence

from .dataset import BinaryDataset, Table, apply_descriptors, binarize, check_schema
from .learner import TrainConfig, train
from .modelio import hyperparams_to_json
from .objective import (
    TOL,
    ConfigError,
    Hyperparams,
    Metrics,
    metrics,
    profit,
    ruleset_from_features,
)

GRID_BETA2 = (0.5, 0.1, 0.01)
GRID_LAMBDA = (0.1, 1.0, 4.0, 8.0, 16.0, 64.0)
GRID_K = (8, 16, 32)


@dataclass(frozen=True)
class CvPlan:
    """Per-sample fold assignment."""

    n_folds: int
    stratified: bool
    seed: int
    assignment: tuple[int, ...]

    def __post_init__(self) -> None:
        if self.n_folds < 2:
            raise ConfigError("n_folds must be >= 2")
        if any(not 0 <= f < self.n_folds for f in self.assignment):
            raise ConfigError("fold assignment out of range")

    def fold_rows(self, fold: int) -> tuple[list[int], list[int]]:
        """(train row indices, test row indices) for one fold."""
        train_rows = [i for i, f in enumerate(self.assignment) if f != fold]
        test_rows = [i for i, f in enumerate(self.assignment) if f == fold]
        return train_rows, test_rows


def make_folds(
    labels: Sequence[int], n_folds: int, *, stratified: bool = True, seed: int = 0
) -> CvPlan:
    rng = random.Random(seed)
    assignment = [0] * len(labels)
    if stratified:
        groups = [
            [i for i, y in enumerate(labels) if y == 1],
            [i for i, y in enumerate(labels) if y == 0],
        ]
    else:
        groups = [list(range(len(labels)))]
    for group in groups:
        rng.shuffle(group)
        for pos, i in enumerate(group):
            assignment[i] = pos % n_folds
    return CvPlan(
        n_folds=n_folds, stratified=stratified, seed=seed, assignment=tuple(assignment)
    )


@dataclass
class FoldResult:
    fold: int
    skipped: str | None = None
    train_metrics: Metrics | None = None
    test_metrics: Metrics | None = None
    rules: list[list[str]] = field(default_factory=list)
    final_profit: float = 0.0
    fit_seconds: float = 0.0

    def as_dict(self) -> dict:
        return {
            "fold": self.fold,
            "skipped": self.skipped,
            "train": self.train_metrics.as_dict() if self.train_metrics else None,
            "test": self.test_metrics.as_dict() if self.test_metrics else None,
            "rules": self.rules,
            "final_profit": self.final_profit,
            "fit_seconds": self.fit_seconds,
        }


@dataclass
class ConfigResult:
    cfg: TrainConfig
    folds: list[FoldResult]

    def _completed(self) -> list[FoldResult]:
        return [f for f in self.folds if f.skipped is None]

    def aggregate(self, split: str, key: str) -> tuple[float, float]:
        """(mean, sample std) of one metric over completed folds."""
        vals = [
            getattr(getattr(f, f"{split}_metrics"), key) for f in self._completed()
        ]
        if not vals:
            return float("nan"), float("nan")
        mean = statistics.fmean(vals)
        std = statistics.stdev(vals) if len(vals) > 1 else 0.0
        return mean, std

    def as_dict(self) -> dict:
        out = {
            "hyperparams": hyperparams_to_json(self.cfg.hyperparams),
            "subproblem": self.cfg.subproblem,
            "refine": self.cfg.refine,
            "folds": [f.as_dict() for f in self.folds],
        }
        for split in ("train", "test"):
            for key in ("accuracy", "n_rules", "n_literals", "overlap"):
                mean, std = self.aggregate(split, key)
                out[f"{split}_{key}_mean"] = mean
                out[f"{split}_{key}_std"] = std
        return out


def default_grid(
    *,
    beta2_values: Sequence[float] = GRID_BETA2,
    lambda_values: Sequence[float] = GRID_LAMBDA,
    k_values: Sequence[int] = GRID_K,
    active_size: int = 16,
    subproblem: str = "local",
    refine: bool = True,
    seed: int = 0,
    time_limit: float | None = None,
) -> list[TrainConfig]:
    """The benchmark grid: beta0 = beta1 = 1 with the listed sweeps."""
    grid = []
    for k in k_values:
        for beta2 in beta2_values:
            for lam in lambda_values:
                grid.append(
                    TrainConfig(
                        hyperparams=Hyperparams(
                            beta0=1.0,
                            beta1=1.0,
                            beta2=beta2,
                            lam=lam,
                            max_rules=k,
                            active_size=active_size,
                        ),
                        subproblem=subproblem,
                        refine=refine,
                        seed=seed,
                        time_limit=time_limit,
                    )
                )
    return grid


def _run_fold(
    args: tuple[Table, dict[str, str], str, TrainConfig, CvPlan, int]
) -> FoldResult:
    table, schema, label_column, cfg, plan, fold = args
    train_rows, test_rows = plan.fold_rows(fold)
    train_table = table.select_rows(train_rows)
    label_col = train_table.column(label_column)
    if len(set(label_col)) < 2:
        warnings.warn(f"fold {fold}: single-class training split; skipped")
        return FoldResult(fold=fold, skipped="single-class training split")
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        train_data = binarize(train_table, schema)
    S, report = train(train_data, cfg)
    test_table = table.select_rows(test_rows)
    test_data = apply_descriptors(test_table, train_data.descriptors, label_column)
    test_set = ruleset_from_features(S.feature_sets(), test_data)
    names = train_data.feature_names()
    return FoldResult(
        fold=fold,
        train_metrics=metrics(S, train_data),
        test_metrics=metrics(test_set, test_data),
        rules=[[names[j] for j in feats] for feats in S.feature_sets()],
        final_profit=report.final_profit,
        fit_seconds=report.fit_seconds,
    )


def cross_validate(
    table: Table,
    schema: dict[str, str],
    grid: Sequence[TrainConfig],
    plan: CvPlan,
    jobs: int = 1,
) -> list[ConfigResult]:
    """Train/evaluate every grid config on every fold.

    Results are ordered by (config, fold) regardless of how jobs complete.
    """
    if not grid:
        raise ConfigError("grid must be nonempty")
    label_column = check_schema(table, schema)
    if len(plan.assignment) != table.n:
        raise ConfigError("fold plan does not match table size")
    tasks = [
        (table, schema, label_column, cfg, plan, fold)
        for cfg in grid
        for fold in range(plan.n_folds)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_run_fold, tasks))
    else:
        outcomes = [_run_fold(t) for t in tasks]
    results = []
    for c, cfg in enumerate(grid):
        folds = outcomes[c * plan.n_folds : (c + 1) * plan.n_folds]
        results.append(ConfigResult(cfg=cfg, folds=folds))
    return results


def select_best(results: Sequence[ConfigResult]) -> int:
    """Index of the winning config: best mean training accuracy, ties by
    fewer mean literals, remaining ties by grid order."""
    if not results:
        raise ConfigError("no results to select from")
    best = 0
    best_key = None
    for i, res in enumerate(results):
        acc, _ = res.aggregate("train", "accuracy")
        lits, _ = res.aggregate("train", "n_literals")
        if math.isnan(acc):
            continue
        key = (-acc, lits)
        if best_key is None or key < best_key:
            best, best_key = i, key
    if best_key is None:
        raise ConfigError("every fold of every config was skipped")
    return best


@dataclass
class GapResult:
    v_approx: float
    v_bnb: float
    gap: float | None
    proven_optimal: bool
    approx_rules: list[tuple[int, ...]]
    bnb_rules: list[tuple[int, ...]]

    def as_dict(self) -> dict:
        return {
            "v_approx": self.v_approx,
            "v_bnb": self.v_bnb,
            "gap": self.gap,
            "proven_optimal": self.proven_optimal,
            "approx_rules": [list(r) for r in self.approx_rules],
            "bnb_rules": [list(r) for r in self.bnb_rules],
        }


def relative_gap(
    data: BinaryDataset, cfg: TrainConfig, bnb_time_limit: float | None = None
) -> GapResult:
    """Train twice (local search vs branch and bound) and compare profits.

    gap = [V(S_bnb) - V(S_approx)] / V(S_bnb); None when V(S_bnb) is zero.
    Negative gaps mean the approximate run won, which is legal. The bnb
    run is untimed when bnb_time_limit is None and proven_optimal then
    reports whether every solve finished.
    """
    approx_cfg = replace(cfg, subproblem="local")
    bnb_cfg = replace(cfg, subproblem="bnb-timed", time_limit=bnb_time_limit)
    S_approx, _ = train(data, approx_cfg)
    S_bnb, report_bnb = train(data, bnb_cfg)
    h = cfg.hyperparams
    v_approx = profit(S_approx, data, h)
    v_bnb = profit(S_bnb, data, h)
    gap = None if abs(v_bnb) <= TOL else (v_bnb - v_approx) / v_bnb
    return GapResult(
        v_approx=v_approx,
        v_bnb=v_bnb,
        gap=gap,
        proven_optimal=report_bnb.all_proven,
        approx_rules=S_approx.feature_sets(),
        bnb_rules=S_bnb.feature_sets(),
    )
