"""Outer objectives evaluated on real features.

The default objective scores each real feature row against the columns of the
closed-form probe (one anchor direction per class) through a temperature-scaled
softmax cross-entropy. An ordinary MSE objective against one-hot targets is
kept as the ablation counterpart. Both come with exact gradients with respect
to the probe.
"""

from dataclasses import dataclass

import numpy as np

from .linalg import DimensionError


@dataclass(frozen=True)
class OuterBatch:
    """Real rows entering the outer loss: features, labels, one-hot targets."""

    x_real: np.ndarray  # M x d
    labels: np.ndarray  # M integer class ids
    t_onehot: np.ndarray  # M x C

    @property
    def m(self) -> int:
        return self.x_real.shape[0]

    @property
    def class_count(self) -> int:
        return self.t_onehot.shape[1]

    def with_features(self, feats: np.ndarray) -> "OuterBatch":
        return OuterBatch(x_real=feats, labels=self.labels, t_onehot=self.t_onehot)


def onehot(labels: np.ndarray, class_count: int) -> np.ndarray:
    labels = np.asarray(labels)
    if labels.size and (labels.min() < 0 or labels.max() >= class_count):
        raise ValueError(
            f"labels must lie in [0, {class_count}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    t = np.zeros((labels.shape[0], class_count))
    t[np.arange(labels.shape[0]), labels] = 1.0
    return t


def make_outer_batch(x_real: np.ndarray, labels: np.ndarray, class_count: int) -> OuterBatch:
    labels = np.asarray(labels, dtype=np.int64)
    if x_real.shape[0] != labels.shape[0]:
        raise DimensionError(
            f"x_real has {x_real.shape[0]} rows but labels has {labels.shape[0]}"
        )
    return OuterBatch(x_real=x_real, labels=labels, t_onehot=onehot(labels, class_count))


def _check_batch_w(batch: OuterBatch, w_star: np.ndarray):
    if w_star.shape != (batch.x_real.shape[1], batch.class_count):
        raise DimensionError(
            f"w_star must be {batch.x_real.shape[1]} x {batch.class_count}, "
            f"got {w_star.shape}"
        )


def _softmax_rows(z: np.ndarray) -> np.ndarray:
    # max subtraction is mandatory: logits at tau=0.07 overflow exp otherwise
    z = z - z.max(axis=1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=1, keepdims=True)


def class_anchor_loss(batch: OuterBatch, w_star: np.ndarray, tau: float) -> float:
    """Mean temperature-scaled cross-entropy of real rows against probe columns."""
    if tau <= 0.0:
        raise ValueError(f"temperature must be > 0, got {tau}")
    _check_batch_w(batch, w_star)
    z = (batch.x_real @ w_star) / tau
    z = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    correct = z[np.arange(batch.m), batch.labels]
    return float(np.mean(lse - correct))


def class_anchor_grad_w(batch: OuterBatch, w_star: np.ndarray, tau: float) -> np.ndarray:
    """Exact gradient of class_anchor_loss: X^T (softmax(Z) - T) / (M * tau)."""
    if tau <= 0.0:
        raise ValueError(f"temperature must be > 0, got {tau}")
    _check_batch_w(batch, w_star)
    pi = _softmax_rows((batch.x_real @ w_star) / tau)
    return batch.x_real.T @ (pi - batch.t_onehot) / (batch.m * tau)


def mse_outer_loss(batch: OuterBatch, w_star: np.ndarray) -> float:
    """Ablation objective: 0.5/M * ||X W* - T||_F^2 against one-hot targets."""
    _check_batch_w(batch, w_star)
    r = batch.x_real @ w_star - batch.t_onehot
    return float(0.5 * np.sum(r * r) / batch.m)


def mse_outer_grad_w(batch: OuterBatch, w_star: np.ndarray) -> np.ndarray:
    _check_batch_w(batch, w_star)
    r = batch.x_real @ w_star - batch.t_onehot
    return batch.x_real.T @ r / batch.m
