"""Exact maximizers used both as solvers and as test oracles.

bnb_max solves the single-rule subproblem exactly over a candidate
feature set by depth-first branch and bound. Each node fixes a rule R and
may only add candidates with higher index, so the tree enumerates
subsets without repeats. The bound

    bound(R) = pos_weight * |uncovered positives still covered| - lam*|R|

dominates v(R') for every superset R' of R: supersets can only lose
covered positives, keep or grow the penalty terms, and pay more length
cost. Pruning on it is therefore lossless and the search is exact unless
the time limit interrupts it, which the result reports honestly.

brute_force_ruleset_opt enumerates entire rule sets for tiny instances;
it exists to pin down the outer greedy's quality in tests.
"""

from __future__ import annotations

import itertools
import math
import time
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from .objective import TOL, ConfigError, Hyperparams, Rule, RuleSet, profit

if TYPE_CHECKING:
    from .dataset import BinaryDataset
    from .subproblem import SubproblemInstance

_TIME_CHECK_EVERY = 256


@dataclass(frozen=True)
class BnbResult:
    features: tuple[int, ...]
    value: float
    proven_optimal: bool
    nodes: int


def bnb_max(
    inst: "SubproblemInstance",
    candidates: Sequence[int],
    time_limit: float | None = None,
) -> BnbResult:
    """Best rule over subsets of the candidate features.

    Candidates are explored in decreasing order of their singleton
    exclusion gain (ties by index), children best-bound-first. A node is
    pruned when its bound cannot beat the incumbent by more than the
    tolerance, so ties keep the first-found rule and the search is
    deterministic. With no time limit the result is provably optimal.
    """
    cands = sorted(set(candidates))
    if any(j < 0 or j >= inst.d for j in cands):
        raise ConfigError(f"candidate index out of range for d={inst.d}")
    u_sing = inst.u.singletons()
    cands.sort(key=lambda j: (-u_sing[j], j))

    columns = inst.columns
    pos_weight = inst.pos_weight
    beta0 = inst.beta0
    beta2 = inst.beta2
    lam = inst.lam

    vp0, vc0, vn0 = inst.uncovered_pos, inst.covered_pos, inst.negatives
    best_feats: tuple[int, ...] = ()
    best_v = (
        pos_weight * vp0.bit_count()
        - beta2 * vc0.bit_count()
        - beta0 * vn0.bit_count()
    )

    deadline = None if time_limit is None else time.monotonic() + time_limit
    timed_out = False
    nodes = 0

    # Stack entries: (bound, next candidate index, features, vp, vc, vn).
    root_bound = pos_weight * vp0.bit_count()
    stack = [(root_bound, 0, (), vp0, vc0, vn0)]
    while stack:
        bound, start, feats, vp, vc, vn = stack.pop()
        if bound <= best_v + TOL:
            continue
        nodes += 1
        if deadline is not None and nodes % _TIME_CHECK_EVERY == 0:
            if time.monotonic() > deadline:
                timed_out = True
                break
        children = []
        size = len(feats)
        for i in range(start, len(cands)):
            col = columns[cands[i]]
            cvp, cvc, cvn = vp & col, vc & col, vn & col
            v_child = (
                pos_weight * cvp.bit_count()
                - beta2 * cvc.bit_count()
                - beta0 * cvn.bit_count()
                - lam * (size + 1)
            )
            if v_child > best_v:
                best_v = v_child
                best_feats = feats + (cands[i],)
            child_bound = pos_weight * cvp.bit_count() - lam * (size + 1)
            if child_bound > best_v + TOL:
                children.append((child_bound, i + 1, feats + (cands[i],), cvp, cvc, cvn))
        children.sort(key=lambda c: c[0])
        stack.extend(children)

    return BnbResult(
        features=tuple(sorted(best_feats)),
        value=best_v,
        proven_optimal=not timed_out,
        nodes=nodes,
    )


def enumerate_best(
    inst: "SubproblemInstance", candidates: Sequence[int]
) -> tuple[tuple[int, ...], float]:
    """Exhaustive subset maximum of v; oracle for bnb_max.

    Walks the subset tree with running coverage masks so 2^20 subsets stay
    affordable. No pruning: every subset's value is computed.
    """
    cands = sorted(set(candidates))
    columns = inst.columns
    pos_weight, beta0, beta2, lam = inst.pos_weight, inst.beta0, inst.beta2, inst.lam

    best_feats: tuple[int, ...] = ()
    best_v = inst.value(())

    def walk(start: int, feats: tuple[int, ...], vp: int, vc: int, vn: int) -> None:
        nonlocal best_feats, best_v
        for i in range(start, len(cands)):
            col = columns[cands[i]]
            cvp, cvc, cvn = vp & col, vc & col, vn & col
            child = feats + (cands[i],)
            v = (
                pos_weight * cvp.bit_count()
                - beta2 * cvc.bit_count()
                - beta0 * cvn.bit_count()
                - lam * len(child)
            )
            if v > best_v:
                best_feats, best_v = child, v
            walk(i + 1, child, cvp, cvc, cvn)

    walk(0, (), inst.uncovered_pos, inst.covered_pos, inst.negatives)
    return best_feats, best_v


def brute_force_ruleset_opt(
    data: "BinaryDataset", h: Hyperparams, max_rules: int | None = None
) -> tuple[RuleSet, float]:
    """Globally best rule set by enumeration over all rule combinations.

    Only feasible for toy instances; guarded so it cannot be misused on
    real data. Ties keep the first set in enumeration order (fewer rules
    first, then lexicographic), matching the deterministic learner tests.
    """
    k_max = h.max_rules if max_rules is None else max_rules
    if data.d > 12:
        raise ConfigError(f"brute force limited to d <= 12, got {data.d}")
    n_rules = 1 << data.d
    total = sum(math.comb(n_rules, k) for k in range(min(k_max, n_rules) + 1))
    if total > 2_000_000:
        raise ConfigError(f"brute force would enumerate {total} rule sets")

    all_rules = []
    for bits in range(n_rules):
        feats = tuple(j for j in range(data.d) if (bits >> j) & 1)
        all_rules.append(Rule.build(feats, data))

    best_set = RuleSet()
    best_v = 0.0
    for k in range(1, min(k_max, n_rules) + 1):
        for combo in itertools.combinations(all_rules, k):
            S = RuleSet(combo)
            v = profit(S, data, h)
            if v > best_v + TOL:
                best_set, best_v = S, v
    return best_set, best_v


def exhaustive_rule_value(
    inst: "SubproblemInstance",
) -> tuple[tuple[int, ...], float]:
    """Global single-rule maximum over all features; oracle helper."""
    return enumerate_best(inst, range(inst.d))
