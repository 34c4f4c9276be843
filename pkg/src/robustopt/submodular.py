"""Monotone submodular maximization under a cardinality constraint.

Set functions take an *item set*: a sorted tuple of distinct item indices.
Objectives are expected to be normalized to [0, 1] by their constructors.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .core import LossFamily, MwuConfig, Sense, average_solution, check_weights, run_improper_robust, BayesianOracle
from .rng import Stream

ItemSet = tuple


def item_set(items: Iterable[int], n: int | None = None) -> ItemSet:
    s = tuple(sorted({int(j) for j in items}))
    if s and (s[0] < 0 or (n is not None and s[-1] >= n)):
        raise ValueError(f"item index out of range for ground set of size {n}: {s}")
    return s


class SubmodularObjective:
    """Set function on items ``0..n-1``.

    :meth:`marginal_gains` may be overridden with a vectorized version; it
    must agree with the differences of :meth:`value`.
    """

    n: int

    def value(self, S: ItemSet) -> float:
        raise NotImplementedError

    def marginal_gains(self, S: ItemSet) -> np.ndarray:
        base = self.value(S)
        chosen = set(S)
        return np.array([0.0 if j in chosen else self.value(item_set(S + (j,))) - base
                         for j in range(self.n)])


class SetFunction(SubmodularObjective):
    """Wraps a plain callable ``f(S) -> float``."""

    def __init__(self, fn, n: int):
        self.fn = fn
        self.n = n

    def value(self, S):
        return float(self.fn(item_set(S, self.n)))


class AdditiveObjective(SubmodularObjective):
    def __init__(self, values):
        self.values = np.asarray(values, dtype=float)
        self.n = self.values.size

    def value(self, S):
        return float(self.values[list(S)].sum()) if S else 0.0

    def marginal_gains(self, S):
        g = self.values.copy()
        g[list(S)] = 0.0
        return g


class CoverageObjective(SubmodularObjective):
    """Weighted coverage ``sum of w_e over covered elements / sum of w_e``.

    ``covers[j]`` lists the elements covered by item ``j``.
    """

    def __init__(self, covers: Sequence[Iterable[int]], element_weights):
        self.element_weights = np.asarray(element_weights, dtype=float)
        if np.any(self.element_weights < 0):
            raise ValueError("element weights must be nonnegative")
        self.n = len(covers)
        n_elem = self.element_weights.size
        self.incidence = np.zeros((self.n, n_elem), dtype=bool)
        for j, c in enumerate(covers):
            self.incidence[j, list(c)] = True
        total = self.element_weights.sum()
        self.total = total if total > 0 else 1.0

    @classmethod
    def random(cls, n_items: int, n_elements: int, density: float, stream: Stream) -> "CoverageObjective":
        inc = stream.random((n_items, n_elements)) < density
        weights = stream.random(n_elements)
        return cls([np.nonzero(row)[0] for row in inc], weights)

    def covered(self, S) -> np.ndarray:
        if not S:
            return np.zeros(self.element_weights.size, dtype=bool)
        return self.incidence[list(S)].any(axis=0)

    def value(self, S):
        return float(self.element_weights[self.covered(S)].sum() / self.total)

    def marginal_gains(self, S):
        fresh = self.incidence & ~self.covered(S)
        g = fresh.astype(float) @ self.element_weights / self.total
        g[list(S)] = 0.0
        return g

    # concave relaxation F(x) = sum_e w_e min(1, sum_{j covers e} x_j) / sum_e w_e

    def relaxation(self, x) -> float:
        load = np.asarray(x, dtype=float) @ self.incidence
        return float(self.element_weights @ np.minimum(1.0, load) / self.total)

    def relaxation_supergradient(self, x) -> np.ndarray:
        # slope of min(1, .) taken as 1 strictly below the kink, 0 at or above it
        load = np.asarray(x, dtype=float) @ self.incidence
        active = self.element_weights * (load < 1.0)
        return self.incidence.astype(float) @ active / self.total


# --------------------------------------------------------------------------
# greedy Bayesian oracle


def weighted_gains(objectives: Sequence[SubmodularObjective], w, S: ItemSet) -> np.ndarray:
    gains = np.array([f.marginal_gains(S) for f in objectives])
    return np.asarray(w, dtype=float) @ gains


def greedy_oracle(objectives: Sequence[SubmodularObjective], w, k: int) -> ItemSet:
    """Greedy maximization of ``sum_i w[i] f_i`` over sets of size ``k``; ties go to the lowest index."""
    if not objectives:
        raise ValueError("empty objective list")
    w = check_weights(w, len(objectives))
    n = objectives[0].n
    if k > n:
        raise ValueError(f"k={k} exceeds ground set size {n}")
    S: ItemSet = ()
    for _ in range(k):
        g = weighted_gains(objectives, w, S)
        g[list(S)] = -np.inf
        S = item_set(S + (int(np.argmax(g)),))
    return S


class GreedyOracle(BayesianOracle):
    alpha = 1 - 1 / math.e

    def __init__(self, objectives: Sequence[SubmodularObjective], k: int):
        self.objectives = list(objectives)
        self.k = k

    def solve(self, w, seed=0):
        return greedy_oracle(self.objectives, w, self.k)


class SetFamily(LossFamily):
    """Adapter presenting set objectives to the reduction (reward sense)."""

    def __init__(self, objectives: Sequence[SubmodularObjective]):
        self.objectives = list(objectives)
        self.m = len(self.objectives)

    def evaluate(self, i, x):
        return self.objectives[i].value(x)


def robust_submodular(objectives, k: int, T: int, eta: float | None = None, seed: int = 0):
    """Robust maximization of the worst-case objective with the greedy oracle."""
    return run_improper_robust(SetFamily(objectives), GreedyOracle(objectives, k),
                               MwuConfig(T=T, eta=eta, sense=Sense.REWARD, seed=seed))


def union_bicriterion(solutions: Sequence[ItemSet]) -> ItemSet:
    if not solutions:
        raise ValueError("empty solution list")
    return item_set(itertools.chain.from_iterable(solutions))


def exhaustive_best(objectives: Sequence[SubmodularObjective], k: int, w=None) -> tuple[ItemSet, float]:
    """Brute-force maximizer over all size-``k`` sets of ``sum_i w[i] f_i`` (uniform ``w`` by default)."""
    n = objectives[0].n
    w = np.full(len(objectives), 1 / len(objectives)) if w is None else np.asarray(w, dtype=float)
    best, best_val = (), -np.inf
    for S in itertools.combinations(range(n), k):
        val = sum(wi * f.value(S) for wi, f in zip(w, objectives))
        if val > best_val:
            best, best_val = S, val
    return best, float(best_val)


# --------------------------------------------------------------------------
# contract checker


@dataclass
class SubmodularVerdict:
    ok: bool
    kind: str = ""            # "monotone" or "submodular" when a violation is found
    witness: tuple = ()       # (A, B): f(A) > f(B) with A subset B, or f(A|B) + f(A&B) > f(A) + f(B)

    def __bool__(self):
        return self.ok


MAX_EXHAUSTIVE_N = 12


def check_monotone_submodular(objective: SubmodularObjective, n: int | None = None,
                              tol: float = 1e-12, samples: int | None = None,
                              seed: int = 0) -> SubmodularVerdict:
    """Check monotonicity and submodularity.

    Exhaustive mode (``n <= 12``) tests every set ``S`` and pair ``j, k``
    outside it: ``f(S) <= f(S+j)`` and ``f(S+j) + f(S+k) >= f(S+j+k) + f(S)``,
    which is equivalent to the lattice inequality over all pairs.  Larger
    ground sets need ``samples=`` to test random ``(S, j, k)`` triples.
    """
    n = objective.n if n is None else n
    if samples is None and n > MAX_EXHAUSTIVE_N:
        raise ValueError(f"n={n} too large for exhaustive check; pass samples= for sampled mode")

    cache: dict = {}

    def f(S):
        if S not in cache:
            cache[S] = objective.value(S)
        return cache[S]

    def test(S):
        outside = [j for j in range(n) if j not in S]
        fS = f(S)
        for j in outside:
            Sj = item_set(S + (j,))
            if f(Sj) < fS - tol:
                return SubmodularVerdict(False, "monotone", (Sj, S))
        for a, b in itertools.combinations(outside, 2):
            A, B = item_set(S + (a,)), item_set(S + (b,))
            if f(item_set(S + (a, b))) + fS > f(A) + f(B) + tol:
                return SubmodularVerdict(False, "submodular", (A, B))
        return None

    if samples is None:
        for r in range(n + 1):
            for S in itertools.combinations(range(n), r):
                bad = test(S)
                if bad is not None:
                    return bad
        return SubmodularVerdict(True)

    stream = Stream(seed)
    for _ in range(samples):
        S = item_set(np.nonzero(stream.random(n) < stream.random())[0])
        bad = test(S)
        if bad is not None:
            return bad
    return SubmodularVerdict(True)


# --------------------------------------------------------------------------
# fractional relaxation for coverage objectives


@dataclass
class FractionalSolution:
    x: np.ndarray
    k: float

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        if np.any(self.x < -1e-12) or np.any(self.x > 1 + 1e-12) or self.x.sum() > self.k + 1e-9:
            raise ValueError("fractional solution outside {0 <= x <= 1, sum x <= k}")


def concave_relaxation_value(cov: CoverageObjective, x) -> float:
    x = x.x if isinstance(x, FractionalSolution) else np.asarray(x, dtype=float)
    if x.size != cov.n:
        raise ValueError(f"dimension {x.size} does not match {cov.n} items")
    return cov.relaxation(x)


def capped_simplex_projection(v, k: float, tol: float = 1e-10) -> np.ndarray:
    """Projection onto ``{0 <= x <= 1, sum x <= k}`` by bisection on the budget multiplier."""
    v = np.asarray(v, dtype=float)
    x = np.clip(v, 0.0, 1.0)
    if x.sum() <= k:
        return x
    lo, hi = 0.0, float(v.max())
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if np.clip(v - mid, 0.0, 1.0).sum() > k:
            lo = mid
        else:
            hi = mid
    return np.clip(v - hi, 0.0, 1.0)


class _MixtureRelaxation:
    def __init__(self, covs, w):
        self.covs = covs
        self.w = np.asarray(w, dtype=float)

    def value(self, x):
        return sum(wi * c.relaxation(x) for wi, c in zip(self.w, self.covs) if wi > 0)

    def supergradient(self, x):
        g = np.zeros(self.covs[0].n)
        for wi, c in zip(self.w, self.covs):
            if wi > 0:
                g += wi * c.relaxation_supergradient(x)
        return g


def fractional_bayesian_oracle(covs: Sequence[CoverageObjective], w, k: float, steps: int = 2000) -> FractionalSolution:
    """Maximize ``sum_i w[i] F_i(x)`` over the capped simplex by projected supergradient ascent.

    Starts at the feasible point ``min(1, k/n)``, uses the fixed step
    ``diameter / sqrt(steps)`` and returns the best iterate seen.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    n = covs[0].n
    obj = _MixtureRelaxation(covs, w)
    diameter = math.sqrt(min(n, 2 * k))
    step = diameter / math.sqrt(steps)
    x = np.full(n, min(1.0, k / n))
    best, best_val = x, obj.value(x)
    for _ in range(steps):
        x = capped_simplex_projection(x + step * obj.supergradient(x), k)
        val = obj.value(x)
        if val > best_val:
            best, best_val = x, val
    return FractionalSolution(best, k)


class RelaxationFamily(LossFamily):
    def __init__(self, covs):
        self.covs = list(covs)
        self.m = len(self.covs)

    def evaluate(self, i, x):
        return self.covs[i].relaxation(x)


def robust_coverage_fractional(covs: Sequence[CoverageObjective], k: float, T: int, steps: int = 2000,
                               eta: float | None = None, seed: int = 0) -> FractionalSolution:
    """Average of the fractional oracle's answers under the reward-sense reduction."""
    oracle = _FractionalOracle(covs, k, steps)
    run = run_improper_robust(RelaxationFamily(covs), oracle,
                              MwuConfig(T=T, eta=eta, sense=Sense.REWARD, seed=seed))
    x = np.clip(average_solution(run.solutions), 0.0, 1.0)
    return FractionalSolution(x, k)


class _FractionalOracle(BayesianOracle):
    def __init__(self, covs, k, steps):
        self.covs, self.k, self.steps = list(covs), k, steps

    def solve(self, w, seed=0):
        return fractional_bayesian_oracle(self.covs, w, self.k, self.steps).x


def independent_rounding(x, seed: int) -> ItemSet:
    """Keep item ``j`` independently with probability ``x[j]``."""
    x = x.x if isinstance(x, FractionalSolution) else np.asarray(x, dtype=float)
    u = Stream(seed).random(x.size)
    return item_set(np.nonzero(u < x)[0])
