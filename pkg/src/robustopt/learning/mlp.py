"""One-hidden-layer ReLU network with a softmax output, in numpy."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..rng import Stream

N_CLASSES = 10


@dataclass
class MlpParams:
    W1: np.ndarray  # (d, h)
    b1: np.ndarray  # (h,)
    W2: np.ndarray  # (h, classes)
    b2: np.ndarray  # (classes,)

    @classmethod
    def init(cls, d: int, hidden: int, stream: Stream, classes: int = N_CLASSES) -> "MlpParams":
        """Zero biases; weights uniform in +-sqrt(6 / (fan_in + fan_out))."""
        a1 = math.sqrt(6 / (d + hidden))
        a2 = math.sqrt(6 / (hidden + classes))
        return cls(stream.uniform(-a1, a1, (d, hidden)), np.zeros(hidden),
                   stream.uniform(-a2, a2, (hidden, classes)), np.zeros(classes))

    @classmethod
    def zeros(cls, d: int, hidden: int, classes: int = N_CLASSES) -> "MlpParams":
        return cls(np.zeros((d, hidden)), np.zeros(hidden), np.zeros((hidden, classes)), np.zeros(classes))

    def arrays(self):
        return (self.W1, self.b1, self.W2, self.b2)

    def flat(self) -> np.ndarray:
        return np.concatenate([a.ravel() for a in self.arrays()])

    def with_flat(self, v) -> "MlpParams":
        out, i = [], 0
        for a in self.arrays():
            out.append(np.asarray(v[i:i + a.size], dtype=float).reshape(a.shape))
            i += a.size
        return MlpParams(*out)

    def axpy(self, alpha: float, other: "MlpParams") -> "MlpParams":
        return MlpParams(*(a + alpha * b for a, b in zip(self.arrays(), other.arrays())))

    def scaled(self, alpha: float) -> "MlpParams":
        return MlpParams(*(alpha * a for a in self.arrays()))


def _logits(params: MlpParams, X):
    pre = X @ params.W1 + params.b1
    hid = np.maximum(pre, 0.0)
    return pre, hid, hid @ params.W2 + params.b2


def softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def as_batch(X, d: int) -> np.ndarray:
    """Flatten images to ``(N, d)``; a single image becomes a batch of one."""
    X = np.asarray(X, dtype=float)
    if X.size == d:
        return X.reshape(1, d)
    return X.reshape(X.shape[0], -1)


def forward(params: MlpParams, X) -> np.ndarray:
    """Class probabilities; a single image gives a vector, a batch a ``(N, classes)`` array."""
    d = params.W1.shape[0]
    single = np.asarray(X).size == d
    Xb = as_batch(X, d)
    if Xb.shape[1] != d:
        raise ValueError(f"input dimension {Xb.shape[1]} does not match network input {d}")
    p = softmax(_logits(params, Xb)[2])
    return p[0] if single else p


def per_example_cross_entropy(probs: np.ndarray, labels) -> np.ndarray:
    labels = np.asarray(labels)
    p = probs[np.arange(len(labels)), labels]
    return -np.log(np.maximum(p, 1e-300))


def loss_and_grad(params: MlpParams, X, y) -> tuple[float, MlpParams]:
    """Mean cross-entropy on the batch and its gradient."""
    d = params.W1.shape[0]
    X = as_batch(X, d)
    y = np.asarray(y)
    n = X.shape[0]
    pre, hid, z = _logits(params, X)
    z = z - z.max(axis=1, keepdims=True)
    logp = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    loss = float(-logp[np.arange(n), y].mean())
    dz = np.exp(logp)
    dz[np.arange(n), y] -= 1.0
    dz /= n
    gW2 = hid.T @ dz
    gb2 = dz.sum(axis=0)
    dh = (dz @ params.W2.T) * (pre > 0)
    gW1 = X.T @ dh
    gb1 = dh.sum(axis=0)
    return loss, MlpParams(gW1, gb1, gW2, gb2)


def weighted_loss_and_grad(params: MlpParams, batches, y, w) -> tuple[float, MlpParams]:
    """``sum_i w[i] * loss_i`` over corrupted copies of one batch, through shared parameters.

    Copies with zero weight are skipped; they contribute exactly nothing.
    """
    total, grad = 0.0, None
    for wi, Xi in zip(w, batches):
        if wi == 0:
            continue
        loss, g = loss_and_grad(params, Xi, y)
        total += wi * loss
        grad = g.scaled(wi) if grad is None else grad.axpy(wi, g)
    if grad is None:
        raise ValueError("all weights are zero")
    return total, grad
