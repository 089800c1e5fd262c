"""Hybrid training objective: pointwise MSE plus listwise softmax-KL.

The listwise term compares whole score rows as temperature-softened
distributions, KL(target || predicted); gradients flow through the
predicted side only.
"""

from __future__ import annotations

import numpy as np

from ..errors import ValidationError


def _check_batch(scores: np.ndarray, targets: np.ndarray) -> None:
    if scores.shape != targets.shape:
        raise ValidationError(
            f"score batch {scores.shape} and target batch {targets.shape} disagree"
        )
    if scores.ndim != 2:
        raise ValidationError("batches must be 2-D (N, m)")
    if scores.shape[0] == 0:
        raise ValidationError("empty batch")


def log_softmax(x: np.ndarray, tau: float) -> np.ndarray:
    z = x / tau
    z = z - z.max(axis=1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=1, keepdims=True))


def loss_mse(scores: np.ndarray, targets: np.ndarray) -> float:
    """(1/N) sum_i (1/m) sum_j (s_ij - u_ij)^2."""
    _check_batch(scores, targets)
    return float(np.mean((scores - targets) ** 2))


def loss_listwise(scores: np.ndarray, targets: np.ndarray, tau: float) -> float:
    """(1/N) sum_i KL(softmax(u_i/tau) || softmax(s_i/tau)), log-sum-exp stable."""
    _check_batch(scores, targets)
    if tau <= 0.0:
        raise ValidationError(f"tau must be positive, got {tau}")
    log_p = log_softmax(targets, tau)
    log_q = log_softmax(scores, tau)
    p = np.exp(log_p)
    return float(np.mean((p * (log_p - log_q)).sum(axis=1)))


def loss_total(scores: np.ndarray, targets: np.ndarray, tau: float) -> float:
    """Unweighted sum of the pointwise and listwise terms."""
    return loss_mse(scores, targets) + loss_listwise(scores, targets, tau)


def loss_total_grad(scores: np.ndarray, targets: np.ndarray, tau: float) -> np.ndarray:
    """dLoss_total/dS: 2(S-U)/(N*m) for the MSE term, (softmax(S/tau) -
    softmax(U/tau))/(N*tau) for the KL term."""
    _check_batch(scores, targets)
    n, m = scores.shape
    q_hat = np.exp(log_softmax(scores, tau))
    p = np.exp(log_softmax(targets, tau))
    return 2.0 * (scores - targets) / (n * m) + (q_hat - p) / (n * tau)
