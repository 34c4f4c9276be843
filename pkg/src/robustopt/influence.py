"""Robust influence maximization over randomly thinned copies of a graph.

Influence of a seed set is the fraction of nodes reachable from it
(seeds included).  Reported numbers are node counts (fraction x |V|).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass

import numpy as np

from .core import RobustRunResult, Sense, bottleneck_of_distribution, simplex_projection
from .graph import DirectedGraph, sample_subgraph
from .rng import Stream, derive_seed
from .submodular import ItemSet, SetFamily, SubmodularObjective, greedy_oracle, item_set, robust_submodular


def influence_value(g: DirectedGraph, S) -> float:
    """Normalized influence ``|reachable(S)| / |V|`` by multi-source BFS."""
    if len(S) == 0:
        return 0.0
    return float(g.reachable(S).sum() / g.node_count)


class InfluenceObjective(SubmodularObjective):
    """Reachability influence backed by the graph's transitive closure."""

    DENSE_LIMIT = 4096

    def __init__(self, g: DirectedGraph):
        self.graph = g
        self.n = g.node_count
        # float32 0/1 entries: row sums are exact counts below 2**24 nodes
        reach = g.reachability_matrix().astype(np.float32)
        self.reach = reach.toarray() if self.n <= self.DENSE_LIMIT else reach

    def covered(self, S) -> np.ndarray:
        if not S:
            return np.zeros(self.n, dtype=bool)
        return np.asarray(self.reach[list(S)].sum(axis=0)).ravel() > 0

    def value(self, S):
        return float(self.covered(S).sum() / self.n)

    def marginal_gains(self, S):
        uncovered = (~self.covered(S)).astype(np.float32)
        g = np.asarray(self.reach @ uncovered, dtype=float).ravel() / self.n
        g[list(S)] = 0.0
        return g

    def dense_reach(self) -> np.ndarray:
        r = self.reach if isinstance(self.reach, np.ndarray) else self.reach.toarray()
        return r > 0


@dataclass
class InfluenceInstance:
    base: DirectedGraph
    subgraphs: list
    p: float
    seed: int

    def __post_init__(self):
        self.objectives = [InfluenceObjective(g) for g in self.subgraphs]

    @classmethod
    def sample(cls, base: DirectedGraph, m: int, p: float, seed: int) -> "InfluenceInstance":
        """Draw ``m`` thinned copies; copy ``i`` uses substream ``derive_seed(seed, i)``."""
        subs = [sample_subgraph(base, p, derive_seed(seed, i)) for i in range(m)]
        return cls(base, subs, p, seed)

    @property
    def m(self) -> int:
        return len(self.subgraphs)

    @property
    def node_count(self) -> int:
        return self.base.node_count

    def family(self) -> SetFamily:
        return SetFamily(self.objectives)

    def worst_case(self, S) -> float:
        return min(f.value(S) for f in self.objectives)

    def bottleneck(self, sets) -> float:
        """De-normalized ``min_i E_{S~uniform(sets)} f_i(S)``."""
        return self.node_count * bottleneck_of_distribution(list(sets), self.family(), Sense.REWARD)


def robust_influence(instance: InfluenceInstance, k: int, T: int, eta: float | None = None,
                     seed: int = 0) -> RobustRunResult:
    """Reward-sense reduction with the greedy oracle; ``run.bottleneck`` is normalized."""
    return robust_submodular(instance.objectives, k, T, eta=eta, seed=seed)


def baseline_individual(instance: InfluenceInstance, k: int) -> list[ItemSet]:
    """Greedy on each sampled graph separately."""
    return [greedy_oracle([f], [1.0], k) for f in instance.objectives]


def baseline_uniform_greedy(instance: InfluenceInstance, k: int) -> ItemSet:
    m = instance.m
    return greedy_oracle(instance.objectives, np.full(m, 1 / m), k)


def perturbed_distribution(m: int, distance: float, stream: Stream, iterations: int = 20) -> np.ndarray:
    """A random simplex point at l1 distance ``distance`` from uniform.

    Direction: i.i.d. random signs per coordinate, centered so the step stays
    on the simplex's plane (if all signs agree the first is flipped).  The step
    length is rescaled and the point re-projected until the l1 distance
    matches; distances beyond the simplex's reach ``2 (1 - 1/m)`` are capped.
    """
    u = np.full(m, 1 / m)
    distance = min(distance, 2 * (1 - 1 / m))
    if distance <= 0 or m < 2:
        return u
    signs = np.where(stream.random(m) < 0.5, -1.0, 1.0)
    if np.all(signs == signs[0]):
        signs[0] = -signs[0]
    direction = signs - signs.mean()
    c = distance / np.abs(direction).sum()
    w = u
    for _ in range(iterations):
        w = simplex_projection(u + c * direction)
        actual = np.abs(w - u).sum()
        if abs(actual - distance) <= 1e-12:
            break
        c *= distance / actual
    return w


def baseline_perturbed(instance: InfluenceInstance, k: int, reference: RobustRunResult,
                       seed: int = 0) -> list[ItemSet]:
    """Greedy on random perturbations of uniform matching the reference run's l1 drift per round."""
    m = instance.m
    u = np.full(m, 1 / m)
    sets = []
    for t, w_ref in enumerate(reference.weights):
        d = float(np.abs(w_ref - u).sum())
        w = perturbed_distribution(m, d, Stream(derive_seed(seed, t)))
        sets.append(greedy_oracle(instance.objectives, w, k))
    return sets


def exhaustive_best_worst_case(instance: InfluenceInstance, k: int, chunk: int = 4096) -> tuple[ItemSet, float]:
    """Best single seed set for the normalized worst-case influence, by enumeration."""
    reach = np.stack([f.dense_reach() for f in instance.objectives])  # (m, n, n)
    n = instance.node_count
    best, best_val = (), -1.0
    combos = itertools.combinations(range(n), k)
    while True:
        block = np.array(list(itertools.islice(combos, chunk)), dtype=np.int64).reshape(-1, k)
        if block.size == 0:
            break
        covered = reach[:, block, :].any(axis=2)  # (m, B, n)
        worst = covered.sum(axis=2).min(axis=0) / n
        j = int(np.argmax(worst))
        if worst[j] > best_val:
            best, best_val = tuple(int(v) for v in block[j]), float(worst[j])
    return best, best_val


@dataclass
class SingleSolutionMetrics:
    best_single_ratio: float
    exhaustive_ratio: float | None


def single_solution_metrics(run: RobustRunResult, instance: InfluenceInstance, k: int | None = None,
                            exhaustive_limit: int = 10**6) -> SingleSolutionMetrics:
    """Best recorded seed set's worst-case influence relative to the distribution and to the exhaustive optimum."""
    best_single = max(instance.worst_case(S) for S in run.solutions)
    ratio = best_single / run.bottleneck if run.bottleneck > 0 else 1.0
    k = len(run.solutions[0]) if k is None else k
    exhaustive = None
    if math.comb(instance.node_count, k) <= exhaustive_limit:
        _, opt = exhaustive_best_worst_case(instance, k)
        exhaustive = best_single / opt if opt > 0 else 1.0
    return SingleSolutionMetrics(ratio, exhaustive)
