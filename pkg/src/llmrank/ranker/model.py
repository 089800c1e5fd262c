"""Dual-branch scoring network: forward pass and exact analytic gradients.

Two parallel two-layer branches encode the interpretable feature vector and
the text embedding; their outputs are concatenated and pushed through a
two-layer fusion head that emits one utility score per candidate model.
Dropout (inverted scaling) sits after each ReLU and is active only in
training mode; the masks drawn in forward are cached and reused verbatim in
backward.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from ..errors import ValidationError

TENSOR_NAMES = (
    "W1_feat", "b1_feat", "W2_feat", "b2_feat",
    "W1_text", "b1_text", "W2_text", "b2_text",
    "W1_fuse", "b1_fuse", "W2_fuse", "b2_fuse",
)


@dataclass
class RankerParams:
    W1_feat: np.ndarray  # (h, d_j)
    b1_feat: np.ndarray  # (h,)
    W2_feat: np.ndarray  # (h, h)
    b2_feat: np.ndarray  # (h,)
    W1_text: np.ndarray  # (h, d_t)
    b1_text: np.ndarray  # (h,)
    W2_text: np.ndarray  # (h, h)
    b2_text: np.ndarray  # (h,)
    W1_fuse: np.ndarray  # (h, 2h)
    b1_fuse: np.ndarray  # (h,)
    W2_fuse: np.ndarray  # (m, h)
    b2_fuse: np.ndarray  # (m,)
    h: int
    feature_schema_version: int = 1
    embedding_dim: int = 0
    pool_fingerprint: str = ""

    @property
    def d_j(self) -> int:
        return self.W1_feat.shape[1]

    @property
    def d_t(self) -> int:
        return self.W1_text.shape[1]

    @property
    def m(self) -> int:
        return self.W2_fuse.shape[0]

    def tensors(self) -> dict[str, np.ndarray]:
        return {name: getattr(self, name) for name in TENSOR_NAMES}

    def validate(self) -> None:
        h, d_j, d_t, m = self.h, self.d_j, self.d_t, self.m
        expected = {
            "W1_feat": (h, d_j), "b1_feat": (h,), "W2_feat": (h, h), "b2_feat": (h,),
            "W1_text": (h, d_t), "b1_text": (h,), "W2_text": (h, h), "b2_text": (h,),
            "W1_fuse": (h, 2 * h), "b1_fuse": (h,), "W2_fuse": (m, h), "b2_fuse": (m,),
        }
        for name, shape in expected.items():
            t = getattr(self, name)
            if t.shape != shape:
                raise ValidationError(f"{name} has shape {t.shape}, expected {shape}")
            if not np.all(np.isfinite(t)):
                raise ValidationError(f"{name} contains NaN/Inf")

    def copy(self) -> "RankerParams":
        return replace(self, **{n: t.copy() for n, t in self.tensors().items()})


def init_params(
    rng: np.random.Generator,
    d_j: int,
    d_t: int,
    m: int,
    h: int = 256,
    feature_schema_version: int = 1,
    pool_fingerprint: str = "",
) -> RankerParams:
    """He-style uniform fan-in initialization for the weights, zeros for biases."""

    def w(rows: int, cols: int) -> np.ndarray:
        limit = np.sqrt(6.0 / cols)
        return rng.uniform(-limit, limit, size=(rows, cols))

    return RankerParams(
        W1_feat=w(h, d_j), b1_feat=np.zeros(h),
        W2_feat=w(h, h), b2_feat=np.zeros(h),
        W1_text=w(h, d_t), b1_text=np.zeros(h),
        W2_text=w(h, h), b2_text=np.zeros(h),
        W1_fuse=w(h, 2 * h), b1_fuse=np.zeros(h),
        W2_fuse=w(m, h), b2_fuse=np.zeros(m),
        h=h,
        feature_schema_version=feature_schema_version,
        embedding_dim=d_t,
        pool_fingerprint=pool_fingerprint,
    )


def _dropout_mask(
    rng: np.random.Generator, shape: tuple[int, ...], rate: float
) -> np.ndarray:
    # Inverted dropout: scale kept units by 1/(1-rate) so inference needs no rescale.
    return (rng.random(shape) >= rate) / (1.0 - rate)


def forward_batch(
    params: RankerParams,
    Xj: np.ndarray,
    Xt: np.ndarray,
    train_mode: bool = False,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> tuple[np.ndarray, dict]:
    """Score a batch; returns (S of shape (N, m), cache for backward)."""
    if Xj.ndim != 2 or Xt.ndim != 2:
        raise ValidationError("feature/embedding batches must be 2-D")
    if Xj.shape[1] != params.d_j:
        raise ValidationError(f"feature dim {Xj.shape[1]} != model d_j {params.d_j}")
    if Xt.shape[1] != params.d_t:
        raise ValidationError(f"embedding dim {Xt.shape[1]} != model d_t {params.d_t}")
    if Xj.shape[0] != Xt.shape[0]:
        raise ValidationError("feature and embedding batches differ in length")

    use_dropout = train_mode and dropout > 0.0
    if use_dropout and rng is None:
        raise ValidationError("training-mode dropout needs a PRNG")
    h = params.h
    n = Xj.shape[0]

    pre1_f = Xj @ params.W1_feat.T + params.b1_feat
    h1_f = np.maximum(pre1_f, 0.0)
    mask_f = _dropout_mask(rng, (n, h), dropout) if use_dropout else None
    d1_f = h1_f * mask_f if use_dropout else h1_f
    z_f = d1_f @ params.W2_feat.T + params.b2_feat

    pre1_t = Xt @ params.W1_text.T + params.b1_text
    h1_t = np.maximum(pre1_t, 0.0)
    mask_t = _dropout_mask(rng, (n, h), dropout) if use_dropout else None
    d1_t = h1_t * mask_t if use_dropout else h1_t
    z_t = d1_t @ params.W2_text.T + params.b2_text

    c = np.hstack([z_f, z_t])
    pre_fu = c @ params.W1_fuse.T + params.b1_fuse
    h_fu = np.maximum(pre_fu, 0.0)
    mask_fu = _dropout_mask(rng, (n, h), dropout) if use_dropout else None
    d_fu = h_fu * mask_fu if use_dropout else h_fu
    scores = d_fu @ params.W2_fuse.T + params.b2_fuse

    cache = {
        "Xj": Xj, "Xt": Xt,
        "pre1_f": pre1_f, "d1_f": d1_f, "mask_f": mask_f,
        "pre1_t": pre1_t, "d1_t": d1_t, "mask_t": mask_t,
        "c": c, "pre_fu": pre_fu, "d_fu": d_fu, "mask_fu": mask_fu,
    }
    return scores, cache


def forward(
    params: RankerParams,
    x_j: np.ndarray,
    x_t: np.ndarray,
    train_mode: bool = False,
    dropout: float = 0.0,
    rng: np.random.Generator | None = None,
) -> np.ndarray:
    """Score a single prompt; returns the m predicted utilities."""
    scores, _ = forward_batch(
        params, np.atleast_2d(x_j), np.atleast_2d(x_t), train_mode, dropout, rng
    )
    return scores[0]


def backward(params: RankerParams, cache: dict, dS: np.ndarray) -> dict[str, np.ndarray]:
    """Backpropagate dLoss/dS through the cached forward pass.

    Dropout masks recorded in the cache are reapplied exactly, so gradients
    match the specific forward that produced the cache.
    """
    h = params.h

    d_fu = cache["d_fu"]
    g = {
        "W2_fuse": dS.T @ d_fu,
        "b2_fuse": dS.sum(axis=0),
    }
    d_dfu = dS @ params.W2_fuse
    if cache["mask_fu"] is not None:
        d_dfu = d_dfu * cache["mask_fu"]
    d_prefu = d_dfu * (cache["pre_fu"] > 0.0)
    g["W1_fuse"] = d_prefu.T @ cache["c"]
    g["b1_fuse"] = d_prefu.sum(axis=0)

    dc = d_prefu @ params.W1_fuse
    dz_f, dz_t = dc[:, :h], dc[:, h:]

    g["W2_feat"] = dz_f.T @ cache["d1_f"]
    g["b2_feat"] = dz_f.sum(axis=0)
    d_d1f = dz_f @ params.W2_feat
    if cache["mask_f"] is not None:
        d_d1f = d_d1f * cache["mask_f"]
    d_pre1f = d_d1f * (cache["pre1_f"] > 0.0)
    g["W1_feat"] = d_pre1f.T @ cache["Xj"]
    g["b1_feat"] = d_pre1f.sum(axis=0)

    g["W2_text"] = dz_t.T @ cache["d1_t"]
    g["b2_text"] = dz_t.sum(axis=0)
    d_d1t = dz_t @ params.W2_text
    if cache["mask_t"] is not None:
        d_d1t = d_d1t * cache["mask_t"]
    d_pre1t = d_d1t * (cache["pre1_t"] > 0.0)
    g["W1_text"] = d_pre1t.T @ cache["Xt"]
    g["b1_text"] = d_pre1t.sum(axis=0)

    return g
