"""Backprop validation against central finite differences."""

from __future__ import annotations

import numpy as np

from embed_router.nn.autoencoder import (
    Autoencoder,
    decode,
    encode,
    forward_backward,
    mse_loss,
)

KINK_TOLERANCE = 1e-6


def _loss(ae: Autoencoder, x: np.ndarray) -> float:
    return mse_loss(x, decode(ae, encode(ae, x)))


def _sample_coords(size: int, count: int) -> np.ndarray:
    """Deterministic, evenly spread flat indices into a parameter group."""
    count = min(count, size)
    return np.unique(np.linspace(0, size - 1, count).round().astype(int))


def gradient_check(
    ae: Autoencoder,
    x: np.ndarray,
    step: float = 1e-5,
    coords_per_group: int = 25,
) -> float:
    """Max relative error between analytic and numeric parameter gradients.

    Checks a deterministic subset of coordinates in each of the four
    parameter groups. Encoder coordinates whose hidden pre-activation sits
    within KINK_TOLERANCE of the relu kink are skipped: finite differences
    straddle the kink there and disagree with any one-sided convention.
    Repeated calls with the same inputs return the identical value.
    """
    x = np.asarray(x, dtype=np.float64)
    _, grads = forward_backward(ae, x)
    pre_act = ae.w_enc @ x + ae.b_enc

    max_rel = 0.0
    for group_i, (param, grad) in enumerate(zip(ae.params(), grads)):
        flat_coords = _sample_coords(param.size, coords_per_group)
        for flat in flat_coords:
            if group_i in (0, 1):
                # row of w_enc / index of b_enc maps to one hidden unit
                hidden_unit = flat // param.shape[1] if param.ndim == 2 else flat
                if abs(pre_act[hidden_unit]) < KINK_TOLERANCE:
                    continue
            idx = np.unravel_index(flat, param.shape)
            saved = param[idx]
            param[idx] = saved + step
            loss_plus = _loss(ae, x)
            param[idx] = saved - step
            loss_minus = _loss(ae, x)
            param[idx] = saved

            numeric = (loss_plus - loss_minus) / (2.0 * step)
            analytic = grad[idx]
            denom = max(abs(numeric), abs(analytic))
            if denom < 1e-10:
                continue
            max_rel = max(max_rel, abs(numeric - analytic) / denom)
    return max_rel
