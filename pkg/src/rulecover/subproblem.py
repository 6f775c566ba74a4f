"""Single-rule subproblem: maximize a difference of submodular functions.

Each greedy step must find a rule R maximizing

    v(R) = sum_i omega_i * [R covers sample i] - lam * |R|

where omega_i is alpha*(beta1+beta2) - beta2 > 0 on positives not yet
covered by the current rule set, -beta2 on covered positives, and -beta0
on negatives. Writing exclusion(R) for the samples R does not cover,

    v(R) = v(empty) + u(R) - w(R)
    u(R) = beta0*|negatives excluded| + beta2*|covered positives excluded|
    w(R) = pos_weight*|uncovered positives excluded| + lam*|R|

u and w are nonnegative, monotone, and submodular (weighted coverage of
exclusion sets), so v is maximized by difference-of-submodular descent:
replace u by a modular chain lower bound tight at the current R, replace
w by one of two modular upper bounds, and move to the best modular
maximizer while it strictly improves v. A greedy ratio heuristic
(enlarge), an exact search over a small active set, and a swap local
search round out the rule finder.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .bits import intersect_all
from .dataset import BinaryDataset
from .objective import TOL, ConfigError, Hyperparams, RuleSet

INF = float("inf")


class ExclusionCoverage:
    """f(A) = sum_t coef_t * |mask_t minus cover(A)| + per_element * |A|.

    cover(A) is the intersection of the columns in A (everything for the
    empty A), so f counts, with weights, the samples in each mask that A
    excludes. Nonnegative, monotone, and submodular in A.
    """

    __slots__ = ("columns", "universe", "d", "terms", "per_element", "_singletons")

    def __init__(
        self,
        columns: Sequence[int],
        universe: int,
        terms: Iterable[tuple[float, int]],
        per_element: float = 0.0,
    ) -> None:
        self.columns = list(columns)
        self.universe = universe
        self.d = len(self.columns)
        self.terms = [(float(c), m) for c, m in terms if c > 0 and m]
        self.per_element = float(per_element)
        self._singletons: list[float] | None = None

    def cover(self, features: Iterable[int]) -> int:
        return intersect_all((self.columns[j] for j in features), self.universe)

    def value(self, features: Sequence[int]) -> float:
        cov = self.cover(features)
        total = self.per_element * len(features)
        for coef, mask in self.terms:
            total += coef * (mask.bit_count() - (mask & cov).bit_count())
        return total

    def singletons(self) -> list[float]:
        """f(j | empty) for every feature j."""
        if self._singletons is None:
            self._singletons = self.marginals_given(())
        return self._singletons

    def marginals_given(self, base: Sequence[int]) -> list[float]:
        """f(j | base) for every j not in base; entries for j in base are 0."""
        base_set = set(base)
        cov = self.cover(base)
        state = [(coef, mask & cov, (mask & cov).bit_count()) for coef, mask in self.terms]
        gains = [0.0] * self.d
        columns = self.columns
        for j in range(self.d):
            if j in base_set:
                continue
            col = columns[j]
            g = self.per_element
            for coef, mv, pc in state:
                g += coef * (pc - (mv & col).bit_count())
            gains[j] = g
        return gains

    def chain_gains(self, perm: Sequence[int]) -> list[float]:
        """Telescoping gains f(prefix k) - f(prefix k-1) along a permutation.

        Indexed by feature, not position. Summing entries over any set Y
        gives the modular chain bound h(Y) <= f(Y), with equality on every
        prefix of the permutation.
        """
        if len(perm) != self.d:
            raise ConfigError("chain permutation must cover all features")
        gains = [0.0] * self.d
        state = [[coef, mask] for coef, mask in self.terms]
        columns = self.columns
        for j in perm:
            col = columns[j]
            g = self.per_element
            for entry in state:
                coef, mv = entry
                nm = mv & col
                g += coef * (mv.bit_count() - nm.bit_count())
                entry[1] = nm
            gains[j] = g
        return gains

    def loo_marginals(self, features: Sequence[int]) -> dict[int, float]:
        """f(j | features minus j) for every j in features."""
        feats = list(features)
        k = len(feats)
        out = {j: self.per_element for j in feats}
        columns = self.columns
        for coef, mask in self.terms:
            prefix = [mask] * (k + 1)
            for i, j in enumerate(feats):
                prefix[i + 1] = prefix[i] & columns[j]
            suffix = [mask] * (k + 1)
            for i in range(k - 1, -1, -1):
                suffix[i] = suffix[i + 1] & columns[feats[i]]
            pc_full = prefix[k].bit_count()
            for i, j in enumerate(feats):
                without = prefix[i] & suffix[i + 1]
                out[j] += coef * (without.bit_count() - pc_full)
        return out


@dataclass
class SubproblemInstance:
    """One greedy step's rule-search problem over the sample weights."""

    columns: list[int]
    exclusions: list[int]
    universe: int
    n: int
    alpha: float
    lam: float
    beta0: float
    beta2: float
    pos_weight: float
    uncovered_pos: int
    covered_pos: int
    negatives: int
    weight_total: float
    u: ExclusionCoverage
    w: ExclusionCoverage

    _w_full_loo: list[float] | None = field(default=None, repr=False)

    @property
    def d(self) -> int:
        return len(self.columns)

    @property
    def pos_samples(self) -> int:
        return self.uncovered_pos

    @property
    def neg_samples(self) -> int:
        return self.covered_pos | self.negatives

    def value(self, features: Sequence[int]) -> float:
        """v(R) for a rule given as sorted distinct feature indices."""
        cov = intersect_all((self.columns[j] for j in features), self.universe)
        return (
            self.pos_weight * (cov & self.uncovered_pos).bit_count()
            - self.beta2 * (cov & self.covered_pos).bit_count()
            - self.beta0 * (cov & self.negatives).bit_count()
            - self.lam * len(features)
        )

    def u_of(self, features: Sequence[int]) -> float:
        return self.u.value(features)

    def w_of(self, features: Sequence[int]) -> float:
        return self.w.value(features)

    def sample_weights(self) -> list[float]:
        out = [0.0] * self.n
        for mask, wt in (
            (self.uncovered_pos, self.pos_weight),
            (self.covered_pos, -self.beta2),
            (self.negatives, -self.beta0),
        ):
            bits = mask
            while bits:
                low = bits & -bits
                out[low.bit_length() - 1] = wt
                bits ^= low
        return out

    def w_full_loo(self) -> list[float]:
        """w(j | all other features), cached; used by one upper bound."""
        if self._w_full_loo is None:
            loo = self.w.loo_marginals(range(self.d))
            self._w_full_loo = [loo[j] for j in range(self.d)]
        return self._w_full_loo


def build_instance(
    S: RuleSet, data: BinaryDataset, h: Hyperparams, alpha: float
) -> SubproblemInstance:
    """Weights for the next rule given the rules already chosen."""
    if not 0 < alpha <= 1:
        raise ConfigError(f"alpha must be in (0, 1], got {alpha!r}")
    pos_weight = alpha * (h.beta1 + h.beta2) - h.beta2
    if pos_weight <= 0:
        raise ConfigError(
            "nonpositive weight on uncovered positives; "
            "hyperparameter validation should have rejected this"
        )
    uncovered_pos = data.positives & ~S.covered
    covered_pos = data.positives & S.covered
    negatives = data.negatives
    weight_total = (
        pos_weight * uncovered_pos.bit_count()
        - h.beta2 * covered_pos.bit_count()
        - h.beta0 * negatives.bit_count()
    )
    u = ExclusionCoverage(
        data.columns, data.universe, [(h.beta0, negatives), (h.beta2, covered_pos)]
    )
    w = ExclusionCoverage(
        data.columns, data.universe, [(pos_weight, uncovered_pos)], per_element=h.lam
    )
    return SubproblemInstance(
        columns=data.columns,
        exclusions=data.exclusions,
        universe=data.universe,
        n=data.n,
        alpha=alpha,
        lam=h.lam,
        beta0=h.beta0,
        beta2=h.beta2,
        pos_weight=pos_weight,
        uncovered_pos=uncovered_pos,
        covered_pos=covered_pos,
        negatives=negatives,
        weight_total=weight_total,
        u=u,
        w=w,
    )


def chain_permutation(
    features: Sequence[int], d: int, rng: random.Random | None = None
) -> list[int]:
    """Ground-set order starting with the rule's features.

    Deterministic without an rng (features ascending, then the rest
    ascending); shuffled within the two blocks otherwise. Keeping the
    rule's features first makes the chain bound tight at the rule.
    """
    inside = sorted(features)
    rest = [j for j in range(d) if j not in set(inside)]
    if rng is not None:
        rng.shuffle(inside)
        rng.shuffle(rest)
    return inside + rest


def _iteration_cap(d: int) -> int:
    return 10 * max(d, 1)


def ds_opt(
    features: Sequence[int],
    inst: SubproblemInstance,
    *,
    restarts: int = 1,
    rng: random.Random | None = None,
    trace: list[float] | None = None,
) -> tuple[int, ...]:
    """Difference-of-submodular descent from the given rule.

    Per iteration the chain bound h (tight at R) replaces u and two
    modular upper bounds replace w, giving two candidate maximizers:

      m1: w(j | R minus j) inside R, w(j | empty) outside
      m2: w(j | everything else) inside R, w(j | R) outside

    The better candidate is taken while it improves v by more than the
    tolerance. Additional restarts rerun the descent with the chain
    permutation shuffled; the best fixed point wins.
    """
    if restarts < 1:
        raise ConfigError("restarts must be >= 1")
    d = inst.d
    start = tuple(sorted(set(features)))
    best: tuple[int, ...] | None = None
    best_v = -INF
    for t in range(restarts):
        perm_rng = None
        if t > 0:
            seed = rng.getrandbits(32) if rng is not None else t
            perm_rng = random.Random(seed)
        # Only the deterministic first descent is traced; later restarts
        # begin back at the start value and would break monotone logs.
        r, v_r = _descend(start, inst, perm_rng, trace if t == 0 else None)
        if v_r > best_v + TOL:
            best, best_v = r, v_r
    assert best is not None
    return best


def _descend(
    start: tuple[int, ...],
    inst: SubproblemInstance,
    perm_rng: random.Random | None,
    trace: list[float] | None,
) -> tuple[tuple[int, ...], float]:
    d = inst.d
    r = start
    v_r = inst.value(r)
    if trace is not None:
        trace.append(v_r)
    cap = _iteration_cap(d)
    w_sing = inst.w.singletons()
    w_full_loo = inst.w_full_loo()
    for _ in range(cap):
        perm = chain_permutation(r, d, perm_rng)
        hv = inst.u.chain_gains(perm)
        w_loo_r = inst.w.loo_marginals(r)
        w_given_r = inst.w.marginals_given(r)
        in_r = set(r)
        r1 = []
        r2 = []
        for j in range(d):
            if j in in_r:
                if hv[j] - w_loo_r[j] > 0:
                    r1.append(j)
                if hv[j] - w_full_loo[j] > 0:
                    r2.append(j)
            else:
                if hv[j] - w_sing[j] > 0:
                    r1.append(j)
                if hv[j] - w_given_r[j] > 0:
                    r2.append(j)
        v1 = inst.value(r1)
        v2 = inst.value(r2)
        cand, v_cand = (r1, v1) if v1 >= v2 else (r2, v2)
        if v_cand > v_r + TOL:
            r, v_r = tuple(cand), v_cand
            if trace is not None:
                trace.append(v_r)
        else:
            return r, v_r
    raise RuntimeError("descent failed to reach a fixed point within the iteration cap")


def enlarge(
    features: Sequence[int], m: int, inst: SubproblemInstance
) -> tuple[int, ...]:
    """Grow the rule to min(m, d) features by best gain ratio.

    Each step adds the feature maximizing u-gain / w-gain given the
    current rule; a zero w-gain counts as +inf when the u-gain is
    positive and -inf otherwise. Ties keep the lowest index. Features are
    added unconditionally, so the result can be worse than the input;
    callers re-optimize over the enlarged active set.
    """
    if m < 1:
        raise ConfigError("active set size must be >= 1")
    d = inst.d
    columns = inst.columns
    r = sorted(set(features))
    in_r = set(r)
    vp = inst.uncovered_pos
    vc = inst.covered_pos
    vn = inst.negatives
    for j in r:
        col = columns[j]
        vp &= col
        vc &= col
        vn &= col
    target = min(m, d)
    while len(r) < target:
        pcp = vp.bit_count()
        pcc = vc.bit_count()
        pcn = vn.bit_count()
        best_j = -1
        best_ratio = None
        for j in range(d):
            if j in in_r:
                continue
            col = columns[j]
            du = inst.beta0 * (pcn - (vn & col).bit_count()) + inst.beta2 * (
                pcc - (vc & col).bit_count()
            )
            dw = inst.pos_weight * (pcp - (vp & col).bit_count()) + inst.lam
            if dw > 0:
                ratio = du / dw
            else:
                ratio = INF if du > 0 else -INF
            if best_ratio is None or ratio > best_ratio:
                best_j, best_ratio = j, ratio
        col = columns[best_j]
        r.append(best_j)
        in_r.add(best_j)
        vp &= col
        vc &= col
        vn &= col
    return tuple(sorted(r))


def best_subset(
    active: Sequence[int], inst: SubproblemInstance, time_limit: float | None = None
) -> tuple[int, ...]:
    """Exact v-maximizing subset of the active features."""
    from .exact_oracle import bnb_max

    return bnb_max(inst, active, time_limit).features


def swap_local_search(
    features: Sequence[int],
    inst: SubproblemInstance,
    *,
    trace: list[float] | None = None,
) -> tuple[int, ...]:
    """Add / remove / swap moves to a local maximum of v.

    Additions need a gain above tolerance; a feature is dropped when its
    contribution on top of the others is at most tolerance; a swap is
    accepted only when strictly better. Scans are first-improvement in
    ascending index order with immediate application.
    """
    d = inst.d
    columns = inst.columns
    r = sorted(set(features))

    def covers(feats: Iterable[int]) -> tuple[int, int, int]:
        vp, vc, vn = inst.uncovered_pos, inst.covered_pos, inst.negatives
        for j in feats:
            col = columns[j]
            vp &= col
            vc &= col
            vn &= col
        return vp, vc, vn

    def value_of(vp: int, vc: int, vn: int, size: int) -> float:
        return (
            inst.pos_weight * vp.bit_count()
            - inst.beta2 * vc.bit_count()
            - inst.beta0 * vn.bit_count()
            - inst.lam * size
        )

    cap = _iteration_cap(d)
    for _ in range(cap):
        changed = False
        vp, vc, vn = covers(r)
        v_r = value_of(vp, vc, vn, len(r))

        # Add while some feature has positive marginal value.
        grew = True
        while grew:
            grew = False
            in_r = set(r)
            for j in range(d):
                if j in in_r:
                    continue
                col = columns[j]
                nvp, nvc, nvn = vp & col, vc & col, vn & col
                gain = value_of(nvp, nvc, nvn, len(r) + 1) - v_r
                if gain > TOL:
                    r.append(j)
                    in_r.add(j)
                    vp, vc, vn = nvp, nvc, nvn
                    v_r += gain
                    changed = grew = True
                    if trace is not None:
                        trace.append(v_r)
        r.sort()

        # Drop features whose contribution is not positive.
        shrunk = True
        while shrunk:
            shrunk = False
            for j in list(r):
                rest = [x for x in r if x != j]
                bvp, bvc, bvn = covers(rest)
                v_rest = value_of(bvp, bvc, bvn, len(rest))
                if v_r - v_rest <= TOL:
                    r = rest
                    vp, vc, vn = bvp, bvc, bvn
                    v_r = v_rest
                    changed = shrunk = True
                    if trace is not None:
                        trace.append(v_r)
                    break

        # First strictly improving swap, applied immediately.
        swapped = True
        while swapped:
            swapped = False
            in_r = set(r)
            for a in list(r):
                rest = [x for x in r if x != a]
                bvp, bvc, bvn = covers(rest)
                found = False
                for b in range(d):
                    if b in in_r:
                        continue
                    col = columns[b]
                    v_new = value_of(bvp & col, bvc & col, bvn & col, len(r))
                    if v_new > v_r + TOL:
                        r = sorted(rest + [b])
                        vp, vc, vn = covers(r)
                        v_r = v_new
                        changed = swapped = found = True
                        if trace is not None:
                            trace.append(v_r)
                        break
                if found:
                    break

        if not changed:
            return tuple(r)
    raise RuntimeError("swap search failed to reach a fixed point within the iteration cap")


def local_combinatorial_search(
    inst: SubproblemInstance,
    m: int = 16,
    *,
    ds_restarts: int = 1,
    rng: random.Random | None = None,
    trace: list[float] | None = None,
) -> tuple[int, ...]:
    """Full single-rule search from the empty rule.

    Rounds of enlarge -> exact active-subset search -> descent -> swap
    search, repeated until the rule stops changing. Every phase is
    non-decreasing in v, so the fixed point is the best rule seen and is
    never worse than the empty rule.
    """
    if inst.d == 0:
        return ()
    r: tuple[int, ...] = ()
    cap = _iteration_cap(inst.d)
    for _ in range(cap):
        prev = r
        active = r
        if len(active) < m:
            active = enlarge(active, m, inst)
        if len(active) <= m:
            r = best_subset(active, inst)
            if trace is not None:
                trace.append(inst.value(r))
        r = ds_opt(r, inst, restarts=ds_restarts, rng=rng, trace=trace)
        r = swap_local_search(r, inst, trace=trace)
        if r == prev:
            return r
    raise RuntimeError("rule search failed to reach a fixed point within the iteration cap")
