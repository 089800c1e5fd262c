import numpy as np
import pytest

from llmrank.ranker import (
    AdamWState,
    adamw_step,
    clip_gradients,
    init_params,
)


def _small_params(seed=0):
    return init_params(np.random.default_rng(seed), d_j=3, d_t=4, m=2, h=2)


def _grads_like(params, fill=0.0):
    return {n: np.full_like(t, fill) for n, t in params.tensors().items()}


def test_first_step_closed_form_without_decay():
    # From zero state with constant gradient g, bias correction makes the
    # first update exactly -lr * g / (|g| + eps).
    params = _small_params()
    before = {n: t.copy() for n, t in params.tensors().items()}
    rng = np.random.default_rng(5)
    grads = {n: rng.normal(size=t.shape) for n, t in params.tensors().items()}
    state = AdamWState.for_params(params)
    lr, eps = 1e-3, 1e-8
    adamw_step(params, grads, state, lr=lr, weight_decay=0.0, eps=eps)
    for name, tensor in params.tensors().items():
        expected = before[name] - lr * grads[name] / (np.abs(grads[name]) + eps)
        assert np.allclose(tensor, expected, atol=1e-15)


def test_decoupled_decay_shrinks_params_under_zero_gradient():
    params = _small_params()
    before = {n: t.copy() for n, t in params.tensors().items()}
    state = AdamWState.for_params(params)
    lr, wd = 1e-2, 0.1
    adamw_step(params, _grads_like(params, 0.0), state, lr=lr, weight_decay=wd)
    for name, tensor in params.tensors().items():
        assert np.allclose(tensor, before[name] * (1.0 - lr * wd), atol=1e-15)


def test_adamw_is_deterministic():
    results = []
    for _ in range(2):
        params = _small_params(seed=3)
        state = AdamWState.for_params(params)
        rng = np.random.default_rng(11)
        for _ in range(10):
            grads = {n: rng.normal(size=t.shape) for n, t in params.tensors().items()}
            adamw_step(params, grads, state, lr=3e-4, weight_decay=1e-2)
        results.append({n: t.copy() for n, t in params.tensors().items()})
    for name in results[0]:
        assert np.array_equal(results[0][name], results[1][name])


def _global_norm(grads):
    return float(np.sqrt(sum(np.sum(g * g) for g in grads.values())))


def test_clip_leaves_small_gradients_unchanged():
    params = _small_params()
    grads = _grads_like(params, 0.0)
    grads["b2_fuse"][:] = [0.3, 0.4]  # norm 0.5
    before = {n: g.copy() for n, g in grads.items()}
    clipped = clip_gradients(grads, max_norm=1.0)
    for name in before:
        assert np.array_equal(clipped[name], before[name])


def test_clip_scales_to_max_norm():
    params = _small_params()
    rng = np.random.default_rng(2)
    grads = {n: rng.normal(size=t.shape) for n, t in params.tensors().items()}
    scale_up = 4.0 / _global_norm(grads)
    for g in grads.values():
        g *= scale_up  # norm exactly 4.0
    clipped = clip_gradients(grads, max_norm=1.0)
    assert _global_norm(clipped) == pytest.approx(1.0, abs=1e-9)


def test_clip_preserves_direction():
    params = _small_params()
    rng = np.random.default_rng(4)
    grads = {n: rng.normal(size=t.shape) * 10 for n, t in params.tensors().items()}
    flat_before = np.concatenate([g.reshape(-1).copy() for g in grads.values()])
    clipped = clip_gradients(grads, max_norm=1.0)
    flat_after = np.concatenate([g.reshape(-1) for g in clipped.values()])
    cosine = flat_before @ flat_after / (
        np.linalg.norm(flat_before) * np.linalg.norm(flat_after)
    )
    assert cosine == pytest.approx(1.0, abs=1e-9)
