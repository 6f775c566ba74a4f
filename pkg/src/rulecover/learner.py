"""Outer training loop: distorted greedy rule selection plus refinement.

The profit V(S) = g(S) - sum c(R) pairs a monotone submodular gain with a
per-rule cost, so plain greedy can be arbitrarily bad. Distorted greedy
fixes this: at step k of K it maximizes

    v_k(R) = (1 - 1/K)^(K - k) * g(R | S) - c(R)

and inserts the winner only when v_k > 0. The early steps discount
coverage, which stops cheap-but-mediocre rules from crowding out the
budget; with an exact subproblem solver the result satisfies
V(S) >= (1 - 1/e) g(OPT) - c(OPT). The schedule at K = 1 is 0^0 = 1.

Refinement then greedily grows the set at full weight (alpha = 1) and
re-solves each rule's subproblem with the rule removed, keeping a
replacement only when the recomputed V strictly improves, so V never
decreases during refinement.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field
from typing import Sequence

from .dataset import BinaryDataset
from .exact_oracle import bnb_max
from .objective import (
    TOL,
    ConfigError,
    Hyperparams,
    Rule,
    RuleSet,
    profit,
)
from .subproblem import SubproblemInstance, build_instance, local_combinatorial_search

SUBPROBLEM_MODES = ("local", "bnb", "bnb-timed")


@dataclass(frozen=True)
class TrainConfig:
    hyperparams: Hyperparams = field(default_factory=Hyperparams)
    subproblem: str = "local"
    time_limit: float | None = None
    refine: bool = True
    seed: int = 0
    ds_restarts: int = 1
    bnb_exact_cap: int = 24

    def __post_init__(self) -> None:
        if self.subproblem not in SUBPROBLEM_MODES:
            raise ConfigError(
                f"unknown subproblem mode {self.subproblem!r}; choose from {SUBPROBLEM_MODES}"
            )
        if self.ds_restarts < 1:
            raise ConfigError("ds_restarts must be >= 1")
        if self.time_limit is not None and self.time_limit <= 0:
            raise ConfigError("time_limit must be positive")


@dataclass
class IterationRecord:
    """One greedy or refine solve: what was searched and what happened."""

    phase: str
    step: int
    alpha: float
    rule: tuple[int, ...] | None
    rule_value: float
    inserted: bool
    profit_after: float
    proven_optimal: bool | None = None

    def as_dict(self) -> dict:
        return {
            "phase": self.phase,
            "step": self.step,
            "alpha": self.alpha,
            "rule": list(self.rule) if self.rule is not None else None,
            "rule_value": self.rule_value,
            "inserted": self.inserted,
            "profit_after": self.profit_after,
            "proven_optimal": self.proven_optimal,
        }


@dataclass
class TrainReport:
    iterations: list[IterationRecord] = field(default_factory=list)
    greedy_profit: float = 0.0
    final_profit: float = 0.0
    greedy_seconds: float = 0.0
    refine_seconds: float = 0.0
    refine_passes: int = 0

    @property
    def fit_seconds(self) -> float:
        return self.greedy_seconds + self.refine_seconds

    @property
    def all_proven(self) -> bool:
        """True when every exact-mode solve finished within its budget."""
        return all(r.proven_optimal is not False for r in self.iterations)

    def as_dict(self) -> dict:
        return {
            "iterations": [r.as_dict() for r in self.iterations],
            "greedy_profit": self.greedy_profit,
            "final_profit": self.final_profit,
            "greedy_seconds": self.greedy_seconds,
            "refine_seconds": self.refine_seconds,
            "fit_seconds": self.fit_seconds,
            "refine_passes": self.refine_passes,
            "all_proven": self.all_proven,
        }


def _solve_rule(
    inst: SubproblemInstance, cfg: TrainConfig, rng: random.Random
) -> tuple[tuple[int, ...], float, bool | None]:
    """Dispatch one subproblem solve; returns (rule, v, proven-or-None)."""
    if cfg.subproblem == "local":
        feats = local_combinatorial_search(
            inst, m=cfg.hyperparams.active_size, ds_restarts=cfg.ds_restarts, rng=rng
        )
        return feats, inst.value(feats), None
    if cfg.subproblem == "bnb" and inst.d > cfg.bnb_exact_cap:
        raise ConfigError(
            f"subproblem mode 'bnb' allows at most {cfg.bnb_exact_cap} features, "
            f"got {inst.d}; use 'bnb-timed' or 'local'"
        )
    limit = cfg.time_limit if cfg.subproblem == "bnb-timed" else None
    res = bnb_max(inst, range(inst.d), limit)
    return res.features, res.value, res.proven_optimal


def _alpha(k: int, K: int) -> float:
    return (1 - 1 / K) ** (K - k)


def distorted_greedy(
    data: BinaryDataset, cfg: TrainConfig
) -> tuple[RuleSet, TrainReport]:
    """Select up to K rules with the distorted marginal-profit schedule."""
    h = cfg.hyperparams
    rng = random.Random(cfg.seed)
    S = RuleSet()
    report = TrainReport()
    t0 = time.monotonic()
    for k in range(1, h.max_rules + 1):
        alpha = _alpha(k, h.max_rules)
        inst = build_instance(S, data, h, alpha)
        feats, v, proven = _solve_rule(inst, cfg, rng)
        inserted = v > TOL and feats not in S.feature_sets()
        if inserted:
            S.add(Rule.build(feats, data))
        report.iterations.append(
            IterationRecord(
                phase="greedy",
                step=k,
                alpha=alpha,
                rule=feats if inserted else None,
                rule_value=v,
                inserted=inserted,
                profit_after=profit(S, data, h),
                proven_optimal=proven,
            )
        )
    report.greedy_seconds = time.monotonic() - t0
    report.greedy_profit = profit(S, data, h)
    report.final_profit = report.greedy_profit
    return S, report


def refine(
    S: RuleSet,
    data: BinaryDataset,
    cfg: TrainConfig,
    report: TrainReport | None = None,
) -> RuleSet:
    """Grow-then-replace passes at alpha = 1 until the set stops changing.

    Replacements (and pure drops) are kept only when the recomputed V
    strictly improves, otherwise reverted, so V is non-decreasing here
    even though the subproblem solver is approximate.
    """
    h = cfg.hyperparams
    rng = random.Random(cfg.seed + 1)
    S = S.copy()
    t0 = time.monotonic()
    passes = 0
    cap = 10 * max(data.d, 1)
    for _ in range(cap):
        before = set(S.feature_sets())
        passes += 1

        # Grow: fill remaining rule budget at full coverage weight.
        for step in range(len(S), h.max_rules):
            inst = build_instance(S, data, h, 1.0)
            feats, v, proven = _solve_rule(inst, cfg, rng)
            inserted = v > TOL and feats not in S.feature_sets()
            if inserted:
                S.add(Rule.build(feats, data))
            if report is not None:
                report.iterations.append(
                    IterationRecord(
                        phase="refine-grow",
                        step=step + 1,
                        alpha=1.0,
                        rule=feats if inserted else None,
                        rule_value=v,
                        inserted=inserted,
                        profit_after=profit(S, data, h),
                        proven_optimal=proven,
                    )
                )
            if not inserted:
                # Deterministic solver, unchanged S: later slots would
                # re-derive the same nonpositive rule.
                break

        # Replace: re-solve each rule's slot with the rule taken out.
        for idx, old in enumerate(list(S.rules)):
            if old not in S:
                continue
            v_before = profit(S, data, h)
            S.remove(old)
            inst = build_instance(S, data, h, 1.0)
            feats, v, proven = _solve_rule(inst, cfg, rng)
            replaced = False
            if v > TOL and feats not in S.feature_sets():
                S.add(Rule.build(feats, data))
                replaced = True
            v_after = profit(S, data, h)
            accepted = v_after > v_before + TOL
            if not accepted:
                if replaced:
                    S.remove(Rule.build(feats, data))
                S.add(old)
            if report is not None:
                report.iterations.append(
                    IterationRecord(
                        phase="refine-replace",
                        step=idx + 1,
                        alpha=1.0,
                        rule=feats if (accepted and replaced) else None,
                        rule_value=v,
                        inserted=accepted,
                        profit_after=profit(S, data, h),
                        proven_optimal=proven,
                    )
                )
        if set(S.feature_sets()) == before:
            break
    else:
        raise RuntimeError("refine failed to reach a fixed point within the iteration cap")

    if report is not None:
        report.refine_seconds = time.monotonic() - t0
        report.refine_passes = passes
        report.final_profit = profit(S, data, h)
    return S


def train(data: BinaryDataset, cfg: TrainConfig) -> tuple[RuleSet, TrainReport]:
    """Distorted greedy plus optional refinement; the standard entry point."""
    S, report = distorted_greedy(data, cfg)
    if cfg.refine:
        S = refine(S, data, cfg, report)
    return S, report


def predict(S: RuleSet | Sequence[Sequence[int]], bits: Sequence[int]) -> int:
    """Predict one sample given its binary feature vector."""
    feature_sets = S.feature_sets() if isinstance(S, RuleSet) else S
    for feats in feature_sets:
        if all(bits[j] for j in feats):
            return 1
    return 0


def predict_dataset(S: RuleSet | Sequence[Sequence[int]], data: BinaryDataset) -> list[int]:
    """Predictions for every row of a binarized dataset."""
    feature_sets = S.feature_sets() if isinstance(S, RuleSet) else S
    covered = 0
    for feats in feature_sets:
        cov = data.universe
        for j in feats:
            cov &= data.columns[j]
        covered |= cov
    return [(covered >> i) & 1 for i in range(data.n)]
