"""Robust training against a corruption set: Bayesian oracles, baselines and bottleneck criteria."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..core import BayesianOracle, LossFamily, MwuConfig, RobustRunResult, Sense, check_weights, eta_gamma, run_improper_robust
from ..rng import Stream, derive_seed
from .corruptions import CorruptionSet
from .data import LabeledDataset
from .mlp import MlpParams, forward, loss_and_grad, per_example_cross_entropy, weighted_loss_and_grad

# Cross-entropy is divided by this before the weight update so objectives lie in [0, 1].
LOSS_CAP = 2 * math.log(10)

HYBRID = "hybrid"
COMPOSITE = "composite"


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    steps: int = 500
    batch_size: int = 100
    hidden: int = 1024

    def __post_init__(self):
        if self.learning_rate <= 0 or self.steps < 1 or self.batch_size < 1 or self.hidden < 1:
            raise ValueError(f"invalid training configuration: {self}")


def minibatches(n: int, batch_size: int, steps: int, stream: Stream):
    """Index arrays for ``steps`` mini-batches, walking fresh permutations epoch by epoch."""
    buf = np.empty(0, dtype=np.int64)
    epoch = 0
    for _ in range(steps):
        while len(buf) < batch_size:
            buf = np.concatenate([buf, stream.spawn(epoch).permutation(n)])
            epoch += 1
        yield buf[:batch_size]
        buf = buf[batch_size:]


def train_oracle_hybrid(w, train: LabeledDataset, cset: CorruptionSet, cfg: TrainConfig,
                        seed: int = 0, trace: list | None = None) -> MlpParams:
    """SGD on a mixture: each training image gets one corruption drawn from ``w``.

    Noise corruptions are redrawn at every presentation of an image.
    """
    w = check_weights(w, cset.m)
    st = Stream(seed)
    params = MlpParams.init(train.input_dim, cfg.hidden, st.spawn(0))
    assignment = st.spawn(1).categorical(w, len(train))
    for s, idx in enumerate(minibatches(len(train), cfg.batch_size, cfg.steps, st.spawn(2))):
        X = train.images[idx]
        which = assignment[idx]
        Xc = np.empty_like(X)
        for i in np.unique(which):
            mask = which == i
            Xc[mask] = cset.specs[i].apply(X[mask], st.spawn(3, s, int(i)))
        loss, grad = loss_and_grad(params, Xc, train.labels[idx])
        params = params.axpy(-cfg.learning_rate, grad)
        if trace is not None:
            trace.append(loss)
    return params


def train_oracle_composite(w, train: LabeledDataset, cset: CorruptionSet, cfg: TrainConfig,
                           seed: int = 0, trace: list | None = None) -> MlpParams:
    """SGD on the ``w``-weighted sum of per-corruption losses of each mini-batch."""
    w = check_weights(w, cset.m)
    st = Stream(seed)
    params = MlpParams.init(train.input_dim, cfg.hidden, st.spawn(0))
    for s, idx in enumerate(minibatches(len(train), cfg.batch_size, cfg.steps, st.spawn(2))):
        X = train.images[idx]
        copies = [spec.apply(X, st.spawn(3, s, i)) if w[i] > 0 else None
                  for i, spec in enumerate(cset.specs)]
        loss, grad = weighted_loss_and_grad(params, copies, train.labels[idx], w)
        params = params.axpy(-cfg.learning_rate, grad)
        if trace is not None:
            trace.append(loss)
    return params


_TRAINERS = {HYBRID: train_oracle_hybrid, COMPOSITE: train_oracle_composite}


class CorruptionOracle(BayesianOracle):
    def __init__(self, train, cset, cfg, method=HYBRID):
        if method not in _TRAINERS:
            raise ValueError(f"unknown method {method!r}")
        self.train, self.cset, self.cfg, self.method = train, cset, cfg, method

    def solve(self, w, seed=0):
        return _TRAINERS[self.method](w, self.train, self.cset, self.cfg, seed=seed)


class CorruptedCopies:
    """One fixed corrupted copy of a dataset per corruption (noise drawn once per copy)."""

    def __init__(self, data: LabeledDataset, cset: CorruptionSet, seed: int = 0):
        self.labels = data.labels
        self.copies = [spec.apply(data.images, Stream(derive_seed(seed, i))).reshape(len(data), -1)
                       for i, spec in enumerate(cset.specs)]

    @property
    def m(self):
        return len(self.copies)

    def probabilities(self, params: MlpParams) -> list[np.ndarray]:
        return [forward(params, X) for X in self.copies]

    def losses(self, params: MlpParams) -> np.ndarray:
        """Mean cross-entropy of ``params`` on each corrupted copy."""
        return np.array([per_example_cross_entropy(p, self.labels).mean() for p in self.probabilities(params)])


class ScaledCorruptionLosses(LossFamily):
    def __init__(self, copies: CorruptedCopies, cap: float = LOSS_CAP):
        self.copies = copies
        self.cap = cap
        self.m = copies.m

    def evaluate(self, i, x):
        return float(self.evaluate_all(x)[i])

    def evaluate_all(self, x):
        return np.minimum(self.copies.losses(x) / self.cap, 1.0)


@dataclass
class LearningRun:
    result: RobustRunResult
    raw_losses: np.ndarray  # (T, m) unscaled validation cross-entropy

    @property
    def solutions(self):
        return self.result.solutions

    @property
    def weights(self):
        return self.result.weights


def _copies(data, cset, seed):
    return data if isinstance(data, CorruptedCopies) else CorruptedCopies(data, cset, seed)


def robust_train(train: LabeledDataset, validation, cset: CorruptionSet, T: int, cfg: TrainConfig,
                 method: str = HYBRID, gamma: float = 0.5, seed: int = 0,
                 eta: float | None = None) -> LearningRun:
    """Multiplicative weights over corruptions with a network-training oracle.

    Weight updates use validation cross-entropy divided by ``LOSS_CAP``;
    ``eta`` defaults to ``sqrt(ln m / 2) * T**-gamma``.
    """
    m = cset.m
    if eta is None:
        eta = eta_gamma(m, T, gamma)
    val = _copies(validation, cset, derive_seed(seed, 0xE7A1))
    result = run_improper_robust(ScaledCorruptionLosses(val), CorruptionOracle(train, cset, cfg, method),
                                 MwuConfig(T=T, eta=eta, sense=Sense.LOSS, seed=seed))
    raw = np.array([val.losses(p) for p in result.solutions])
    return LearningRun(result, raw)


def train_schedule(schedule: Sequence, train, cset, cfg, method=HYBRID, seed: int = 0) -> list[MlpParams]:
    """Run the oracle on a fixed sequence of weight vectors (round ``t`` seeded like the robust loop)."""
    oracle = CorruptionOracle(train, cset, cfg, method)
    return [oracle.solve(np.asarray(w, dtype=float), seed=derive_seed(seed, t)) for t, w in enumerate(schedule)]


def _one_hot(i, m):
    e = np.zeros(m)
    e[i] = 1.0
    return e


def baseline_individual(i: int, train, cset, T: int, cfg, seed: int = 0) -> list[MlpParams]:
    """Train on corruption ``i`` alone in every round."""
    return train_schedule([_one_hot(i, cset.m)] * T, train, cset, cfg, HYBRID, seed)


def baseline_even_split(train, cset, T: int, cfg, seed: int = 0) -> list[MlpParams]:
    """Round ``t`` (0-based) trains on corruption ``t mod m``."""
    return train_schedule([_one_hot(t % cset.m, cset.m) for t in range(T)], train, cset, cfg, HYBRID, seed)


def baseline_uniform(train, cset, T: int, cfg, seed: int = 0, method: str = HYBRID) -> list[MlpParams]:
    """The oracle with the weights pinned at uniform for all rounds."""
    return train_schedule([np.full(cset.m, 1 / cset.m)] * T, train, cset, cfg, method, seed)


# --------------------------------------------------------------------------
# criteria


def individual_bottleneck_loss(solutions: Sequence[MlpParams], data, cset: CorruptionSet | None = None,
                               seed: int = 0) -> float:
    """Worst corruption's cross-entropy averaged over the solutions."""
    if not solutions:
        raise ValueError("empty solution list")
    copies = _copies(data, cset, seed)
    per_solution = np.array([copies.losses(p) for p in solutions])
    return float(per_solution.mean(axis=0).max())


def ensemble_bottleneck_loss(solutions: Sequence[MlpParams], data, cset: CorruptionSet | None = None,
                             seed: int = 0) -> float:
    """Worst corruption's cross-entropy of the averaged-prediction ensemble."""
    if not solutions:
        raise ValueError("empty solution list")
    copies = _copies(data, cset, seed)
    worst = -np.inf
    for i, X in enumerate(copies.copies):
        mean_p = sum(forward(p, X) for p in solutions) / len(solutions)
        worst = max(worst, float(per_example_cross_entropy(mean_p, copies.labels).mean()))
    return worst


def ensemble_predict(solutions: Sequence[MlpParams], img) -> int | np.ndarray:
    """Argmax of the mean softmax vector (lowest digit on ties)."""
    if not solutions:
        raise ValueError("empty solution list")
    mean_p = sum(forward(p, img) for p in solutions) / len(solutions)
    return int(np.argmax(mean_p)) if mean_p.ndim == 1 else np.argmax(mean_p, axis=1)
