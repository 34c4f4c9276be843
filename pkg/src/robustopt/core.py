"""Oracle-efficient improper robust optimization.

The learner is an (approximate) Bayesian oracle that best-responds to a
distribution over objectives; the adversary runs multiplicative weights over
the objective indices (or lazy projected gradient ascent over a convex
parameter set for infinite families).  The output is the uniform distribution
over the oracle's answers.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence

import numpy as np

from .rng import derive_seed

LOSS_SLACK = 1e-9


class RobustOptError(Exception):
    """Base class for errors raised by the reduction."""


class OracleFailure(RobustOptError):
    def __init__(self, round_index: int, cause: BaseException):
        super().__init__(f"oracle failed at round {round_index}: {cause!r}")
        self.round_index = round_index
        self.cause = cause


class LossRangeError(RobustOptError):
    def __init__(self, round_index: int, values):
        super().__init__(f"objective values outside [0, 1] at round {round_index}: {values}")
        self.round_index = round_index


class CorruptedStateError(RobustOptError):
    pass


class Sense(enum.Enum):
    LOSS = "loss"      # minimize the worst-case (max) objective
    REWARD = "reward"  # maximize the worst-case (min) objective

    @classmethod
    def parse(cls, value) -> "Sense":
        return value if isinstance(value, cls) else cls(str(value).lower())


def check_weights(w, m: int | None = None, tol: float = 1e-9) -> np.ndarray:
    """Validate a probability vector over objective indices and return it as an array."""
    w = np.asarray(w, dtype=float)
    if w.ndim != 1 or w.size < 1:
        raise ValueError("weight vector must be a nonempty 1-d array")
    if m is not None and w.size != m:
        raise ValueError(f"weight vector has length {w.size}, expected {m}")
    if np.any(w < 0) or abs(w.sum() - 1.0) > tol:
        raise ValueError(f"not a probability vector: {w}")
    return w


# --------------------------------------------------------------------------
# objective families and oracles


class LossFamily:
    """``m`` objectives over a shared solution space, each valued in [0, 1].

    Subclasses implement :meth:`evaluate`; :meth:`evaluate_all` may be
    overridden with a vectorized version as long as it returns the same
    values in index order.
    """

    m: int

    def evaluate(self, i: int, x) -> float:
        raise NotImplementedError

    def evaluate_all(self, x) -> np.ndarray:
        return np.array([self.evaluate(i, x) for i in range(self.m)], dtype=float)


class TableLosses(LossFamily):
    """Finite solution space ``{0..|X|-1}`` with ``table[x, i] = L_i(x)``."""

    def __init__(self, table):
        self.table = np.asarray(table, dtype=float)
        if self.table.ndim != 2:
            raise ValueError("loss table must be 2-d (solutions x objectives)")
        self.m = self.table.shape[1]

    def evaluate(self, i, x):
        return float(self.table[x, i])

    def evaluate_all(self, x):
        return self.table[x].copy()


class FunctionLosses(LossFamily):
    def __init__(self, functions: Sequence[Callable[[Any], float]]):
        if not functions:
            raise ValueError("need at least one objective")
        self.functions = list(functions)
        self.m = len(self.functions)

    def evaluate(self, i, x):
        return float(self.functions[i](x))


class BayesianOracle:
    """Returns a solution (approximately) optimal for a distribution over objectives.

    ``alpha`` is the declared approximation factor: for losses the returned
    ``x`` satisfies ``E_w[L(x)] <= alpha * min_x E_w[L(x)]`` (alpha >= 1), for
    rewards ``E_w[f(x)] >= alpha * max_x E_w[f(x)]`` (alpha <= 1).
    """

    alpha: float = 1.0

    def solve(self, w: np.ndarray, seed: int = 0):
        raise NotImplementedError


class FunctionOracle(BayesianOracle):
    def __init__(self, fn: Callable[..., Any], alpha: float = 1.0, takes_seed: bool = False):
        self.fn = fn
        self.alpha = alpha
        self.takes_seed = takes_seed

    def solve(self, w, seed=0):
        return self.fn(w, seed) if self.takes_seed else self.fn(w)


class ExactFiniteOracle(BayesianOracle):
    """Exhaustive Bayesian oracle over an explicit finite solution space."""

    alpha = 1.0

    def __init__(self, solution_space: Sequence, losses: LossFamily, sense=Sense.LOSS):
        if len(solution_space) == 0:
            raise ValueError("solution space is empty")
        self.space = list(solution_space)
        self.sense = Sense.parse(sense)
        self.values = np.array([losses.evaluate_all(x) for x in self.space], dtype=float)

    def expected(self, w) -> np.ndarray:
        return self.values @ np.asarray(w, dtype=float)

    def solve(self, w, seed=0):
        scores = self.expected(w)
        # argmin/argmax return the first extremum: lowest-index tie-breaking
        j = int(np.argmin(scores) if self.sense is Sense.LOSS else np.argmax(scores))
        return self.space[j]


def exact_finite_oracle(solution_space, losses, sense=Sense.LOSS) -> ExactFiniteOracle:
    return ExactFiniteOracle(solution_space, losses, sense)


# --------------------------------------------------------------------------
# step sizes and bounds


def eta_default(m: int, T: int) -> float:
    if m < 1 or T < 1:
        raise ValueError("need m >= 1 and T >= 1")
    return math.sqrt(math.log(m) / (2 * T))


def eta_gamma(m: int, T: int, gamma: float) -> float:
    """Step size ``sqrt(ln m / 2) * T**-gamma``; ``gamma = 0.5`` is :func:`eta_default`."""
    if m < 1 or T < 1 or not 0 < gamma <= 1:
        raise ValueError("need m >= 1, T >= 1 and gamma in (0, 1]")
    return math.sqrt(math.log(m) / 2) * T ** (-gamma)


def regret_bound(m: int, T: int, alpha: float = 1.0, eta: float | None = None):
    """Additive term of the worst-case guarantee.

    Without ``eta``: ``sqrt(2 ln m / T)`` (the guarantee is ``alpha*tau + that``).
    With ``eta``: the pair ``(alpha * (1 + eta), ln m / (eta * T))`` for the
    guarantee ``multiplier * tau + additive``.
    """
    if m < 1 or T < 1 or alpha <= 0:
        raise ValueError("need m >= 1, T >= 1, alpha > 0")
    if eta is None:
        return math.sqrt(2 * math.log(m) / T)
    return alpha * (1 + eta), math.log(m) / (eta * T)


# --------------------------------------------------------------------------
# multiplicative weights reduction


def mwu_weights(cumulative, eta: float, sense=Sense.LOSS) -> np.ndarray:
    """Exponential weights over the running objective sums.

    Losses put mass ``exp(+eta * cum)`` on the objectives hurting the learner
    most; rewards use ``exp(-eta * cum)``.
    """
    c = np.asarray(cumulative, dtype=float)
    if not np.all(np.isfinite(c)):
        raise CorruptedStateError(f"non-finite cumulative objective values: {c}")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    z = eta * c if Sense.parse(sense) is Sense.LOSS else -eta * c
    z = np.exp(z - z.max())
    return z / z.sum()


def ordered_mean(rows) -> np.ndarray:
    """Column means accumulated strictly row by row (reproducible summation order)."""
    rows = np.asarray(rows, dtype=float)
    acc = np.zeros(rows.shape[1:], dtype=float)
    for r in rows:
        acc = acc + r
    return acc / len(rows)


def _worst(means: np.ndarray, sense: Sense) -> float:
    return float(means.max() if sense is Sense.LOSS else means.min())


@dataclass(frozen=True)
class MwuConfig:
    T: int
    eta: float | None = None  # None: eta_default(m, T)
    sense: Sense = Sense.LOSS
    seed: int = 0

    def __post_init__(self):
        if self.T < 1:
            raise ValueError("T must be >= 1")
        if self.eta is not None and self.eta < 0:
            raise ValueError("eta must be nonnegative")
        object.__setattr__(self, "sense", Sense.parse(self.sense))


@dataclass
class RobustRunResult:
    solutions: list
    weights: np.ndarray     # (T, m) adversary distributions w_1..w_T
    loss_table: np.ndarray  # (T, m) objective values L_i(x_t)
    sense: Sense
    eta: float
    bottleneck: float = field(init=False)

    def __post_init__(self):
        self.bottleneck = _worst(ordered_mean(self.loss_table), self.sense)

    @property
    def T(self) -> int:
        return len(self.solutions)

    @property
    def m(self) -> int:
        return self.loss_table.shape[1]

    def prefix_bottlenecks(self) -> np.ndarray:
        """Bottleneck of the uniform distribution over x_1..x_t for every t."""
        acc = np.zeros(self.m)
        out = np.empty(self.T)
        for t, row in enumerate(self.loss_table):
            acc = acc + row
            out[t] = _worst(acc / (t + 1), self.sense)
        return out

    def weight_drift(self) -> np.ndarray:
        """l1 change ``||w_{t+1} - w_t||_1`` for t = 1..T-1."""
        return np.abs(np.diff(self.weights, axis=0)).sum(axis=1)


def run_improper_robust(losses: LossFamily, oracle: BayesianOracle, config: MwuConfig) -> RobustRunResult:
    """Multiplicative weights adversary against a Bayesian oracle for ``config.T`` rounds.

    The oracle receives ``seed=derive_seed(config.seed, t)`` at round ``t`` so
    randomized oracles stay reproducible.
    """
    m = losses.m
    if m < 1:
        raise ValueError("need at least one objective")
    eta = eta_default(m, config.T) if config.eta is None else float(config.eta)
    cumulative = np.zeros(m)
    solutions, weights, table = [], [], []
    for t in range(config.T):
        w = mwu_weights(cumulative, eta, config.sense)
        try:
            x = oracle.solve(w, seed=derive_seed(config.seed, t))
        except RobustOptError:
            raise
        except Exception as exc:
            raise OracleFailure(t, exc) from exc
        row = np.asarray(losses.evaluate_all(x), dtype=float)
        if row.shape != (m,) or not np.all((row >= -LOSS_SLACK) & (row <= 1 + LOSS_SLACK)):
            raise LossRangeError(t, row)
        cumulative = cumulative + row
        solutions.append(x)
        weights.append(w)
        table.append(row)
    return RobustRunResult(solutions, np.array(weights), np.array(table), config.sense, eta)


def bottleneck_of_distribution(solutions: Sequence, losses: LossFamily, sense=Sense.LOSS) -> float:
    """Worst-case expected objective of the uniform distribution over ``solutions``."""
    if len(solutions) == 0:
        raise ValueError("empty solution list")
    table = [losses.evaluate_all(x) for x in solutions]
    return _worst(ordered_mean(table), Sense.parse(sense))


def average_solution(solutions: Sequence) -> np.ndarray:
    if len(solutions) == 0:
        raise ValueError("empty solution list")
    arrays = [np.asarray(s, dtype=float) for s in solutions]
    if any(a.shape != arrays[0].shape for a in arrays):
        raise ValueError("solutions have mixed dimensions")
    return ordered_mean(arrays)


# --------------------------------------------------------------------------
# infinite families: projected gradient adversary


def simplex_projection(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort and threshold)."""
    v = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError("cannot project non-finite vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ks = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ks > 0)[0][-1]
    theta = css[rho] / (rho + 1)
    return np.maximum(v - theta, 0.0)


class ConvexParamSet:
    """A convex set of adversary parameters with Euclidean projection."""

    dim: int
    radius: float  # max_{w in W} ||w||_2

    def project(self, v) -> np.ndarray:
        raise NotImplementedError


class Simplex(ConvexParamSet):
    def __init__(self, m: int):
        self.dim = m
        self.radius = 1.0

    def project(self, v):
        return simplex_projection(v)


class EuclideanBall(ConvexParamSet):
    def __init__(self, dim: int, radius: float = 1.0):
        self.dim = dim
        self.radius = float(radius)

    def project(self, v):
        v = np.asarray(v, dtype=float)
        n = np.linalg.norm(v)
        return v if n <= self.radius else v * (self.radius / n)


class ParamLoss:
    """Loss ``L(x, w)`` concave in the adversary parameter ``w``, plus an oracle for fixed ``w``."""

    def value(self, x, w) -> float:
        raise NotImplementedError

    def grad_w(self, x, w) -> np.ndarray:
        raise NotImplementedError

    def solve(self, w, seed: int = 0):
        raise NotImplementedError


class MixtureLoss(ParamLoss):
    """The finite family as a simplex-parameterized loss ``sum_i w[i] L_i(x)``."""

    def __init__(self, losses: LossFamily, oracle: BayesianOracle):
        self.losses = losses
        self.oracle = oracle

    def value(self, x, w):
        return float(np.dot(w, self.losses.evaluate_all(x)))

    def grad_w(self, x, w):
        return self.losses.evaluate_all(x)

    def solve(self, w, seed=0):
        return self.oracle.solve(w, seed=seed)


@dataclass
class InfiniteRunResult:
    solutions: list
    params: np.ndarray  # (T, dim) adversary parameters w_1..w_T
    values: np.ndarray  # (T,) realized L(x_t, w_t)
    eta: float

    def bottleneck(self, losses: LossFamily, sense=Sense.LOSS) -> float:
        return bottleneck_of_distribution(self.solutions, losses, sense)


def run_infinite_robust(problem: ParamLoss, param_set: ConvexParamSet, T: int,
                        eta: float = 0.0, seed: int = 0) -> InfiniteRunResult:
    """Lazy projected gradient ascent adversary over ``param_set``.

    Each round: ``w_t = project(eta * theta)``, ``x_t = problem.solve(w_t)``,
    then ``theta += grad_w L(x_t, w_t)``.  ``eta == 0`` selects
    ``radius / sqrt(2T)``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if eta < 0:
        raise ValueError("eta must be nonnegative")
    if eta == 0:
        eta = param_set.radius / math.sqrt(2 * T)
    theta = np.zeros(param_set.dim)
    solutions, params, values = [], [], []
    for t in range(T):
        w = param_set.project(eta * theta)
        try:
            x = problem.solve(w, seed=derive_seed(seed, t))
        except Exception as exc:
            raise OracleFailure(t, exc) from exc
        g = np.asarray(problem.grad_w(x, w), dtype=float)
        if not np.all(np.isfinite(g)):
            raise CorruptedStateError(f"non-finite gradient at round {t}")
        theta = theta + g
        solutions.append(x)
        params.append(w)
        values.append(problem.value(x, w))
    return InfiniteRunResult(solutions, np.array(params), np.array(values), eta)


def minimax_value(table, sense=Sense.LOSS) -> float:
    """Pure-strategy minimax of a (solutions x objectives) table by enumeration."""
    table = np.asarray(table, dtype=float)
    if Sense.parse(sense) is Sense.LOSS:
        return float(table.max(axis=1).min())
    return float(table.min(axis=1).max())
