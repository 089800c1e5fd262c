"""AdamW with decoupled weight decay, and global-norm gradient clipping."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .model import RankerParams, TENSOR_NAMES


@dataclass
class AdamWState:
    step: int = 0
    m: dict[str, np.ndarray] = field(default_factory=dict)
    v: dict[str, np.ndarray] = field(default_factory=dict)

    @classmethod
    def for_params(cls, params: RankerParams) -> "AdamWState":
        return cls(
            step=0,
            m={n: np.zeros_like(t) for n, t in params.tensors().items()},
            v={n: np.zeros_like(t) for n, t in params.tensors().items()},
        )


def adamw_step(
    params: RankerParams,
    grads: dict[str, np.ndarray],
    state: AdamWState,
    lr: float,
    weight_decay: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[RankerParams, AdamWState]:
    """One update, in place.  Decay is decoupled: applied directly to the
    parameters, never folded into the moment estimates."""
    state.step += 1
    t = state.step
    bc1 = 1.0 - beta1 ** t
    bc2 = 1.0 - beta2 ** t
    for name in TENSOR_NAMES:
        g = grads[name]
        m = state.m[name]
        v = state.v[name]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        m_hat = m / bc1
        v_hat = v / bc2
        p = getattr(params, name)
        p -= lr * weight_decay * p + lr * m_hat / (np.sqrt(v_hat) + eps)
    return params, state


def clip_gradients(
    grads: dict[str, np.ndarray], max_norm: float = 1.0
) -> dict[str, np.ndarray]:
    """Scale all gradients by max_norm/norm when the global L2 norm exceeds it."""
    total = np.sqrt(sum(float(np.sum(g * g)) for g in grads.values()))
    if total > max_norm:
        scale = max_norm / total
        for g in grads.values():
            g *= scale
    return grads
