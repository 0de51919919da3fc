"""Optimizer update rule against a scratch scalar oracle."""

import numpy as np
import pytest

from embed_router.errors import InputShapeError
from embed_router.nn.train import AdamState, adam_step


def scalar_adam_oracle(grads, lr, beta1=0.9, beta2=0.999, eps=1e-8):
    """Independent scalar Adam starting from param 0."""
    param, m, v = 0.0, 0.0, 0.0
    for t, g in enumerate(grads, start=1):
        m = beta1 * m + (1 - beta1) * g
        v = beta2 * v + (1 - beta2) * g * g
        m_hat = m / (1 - beta1**t)
        v_hat = v / (1 - beta2**t)
        param -= lr * m_hat / (np.sqrt(v_hat) + eps)
    return param


def test_zero_gradient_is_fixed_point():
    params = [np.ones((3, 4)), np.full(5, 2.0)]
    grads = [np.zeros((3, 4)), np.zeros(5)]
    state = AdamState.for_params(params)
    new_params, _ = adam_step(params, grads, state, lr=0.1)
    for p, q in zip(params, new_params):
        assert np.array_equal(p, q)


def test_first_step_magnitude_is_lr():
    params = [np.zeros(1)]
    grads = [np.ones(1)]
    state = AdamState.for_params(params)
    new_params, _ = adam_step(params, grads, state, lr=0.01)
    # bias-corrected first step: lr * g/|g| up to eps
    assert abs(new_params[0][0] + 0.01) < 1e-9


def test_ten_steps_match_scalar_oracle():
    rng = np.random.default_rng(0)
    grads = rng.normal(size=10)
    params = [np.zeros(1)]
    state = AdamState.for_params(params)
    for g in grads:
        params, state = adam_step(params, [np.array([g])], state, lr=0.05)
    expected = scalar_adam_oracle(grads, lr=0.05)
    assert abs(params[0][0] - expected) < 1e-12


def test_quadratic_descent():
    # minimize f(x) = (x - 3)^2 from 0; gradient 2(x-3)
    params = [np.zeros(1)]
    state = AdamState.for_params(params)
    for _ in range(2000):
        grad = 2.0 * (params[0] - 3.0)
        params, state = adam_step(params, [grad], state, lr=0.05)
    assert abs(params[0][0] - 3.0) < 1e-3


def test_shape_mismatch_raises():
    params = [np.zeros((2, 2))]
    state = AdamState.for_params(params)
    with pytest.raises(InputShapeError):
        adam_step(params, [np.zeros(3)], state, lr=0.1)
