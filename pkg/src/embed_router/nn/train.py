"""Adam optimizer and the mini-batch training loop.

Training recipe: Adam on the MSE reconstruction loss, 45 epochs, learning
rate 1e-2 cut by 10x every 15 epochs, batch size 128, per-epoch shuffle
drawn from the caller's Rng. Bit-reproducible for a fixed (model seed,
data, config, rng seed) in a fixed environment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from embed_router.errors import DivergenceError, EmptyDatasetError, InputShapeError, ParamError
from embed_router.nn.autoencoder import INPUT_DIM, Autoencoder, forward_backward
from embed_router.rng import Rng


@dataclass
class TrainConfig:
    epochs: int = 45
    lr0: float = 1e-2
    lr_decay_every: int = 15
    lr_decay_factor: float = 10.0
    batch_size: int = 128
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8

    def validate(self) -> None:
        if self.epochs < 1:
            raise ParamError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ParamError("batch_size must be >= 1")
        if self.lr0 <= 0:
            raise ParamError("lr0 must be > 0")
        if self.lr_decay_factor <= 1:
            raise ParamError("lr_decay_factor must be > 1")
        if self.lr_decay_every < 1:
            raise ParamError("lr_decay_every must be >= 1")


def learning_rate(cfg: TrainConfig, epoch: int) -> float:
    """Piecewise-constant schedule: lr0 / factor^(epoch // decay_every)."""
    return cfg.lr0 / cfg.lr_decay_factor ** (epoch // cfg.lr_decay_every)


@dataclass
class AdamState:
    """First/second moment estimates plus the shared step counter."""

    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_params(cls, params: list[np.ndarray]) -> "AdamState":
        return cls(
            step=0,
            m=[np.zeros_like(p) for p in params],
            v=[np.zeros_like(p) for p in params],
        )


def adam_step(
    params: list[np.ndarray],
    grads: list[np.ndarray],
    state: AdamState,
    lr: float,
    beta1: float = 0.9,
    beta2: float = 0.999,
    eps: float = 1e-8,
) -> tuple[list[np.ndarray], AdamState]:
    """One bias-corrected Adam update; returns fresh arrays and state."""
    if len(params) != len(grads) or len(params) != len(state.m):
        raise InputShapeError("params, grads and moment state must align")
    for p, g, m in zip(params, grads, state.m):
        if p.shape != g.shape or p.shape != m.shape:
            raise InputShapeError(f"shape mismatch {p.shape} vs {g.shape}")

    t = state.step + 1
    c1 = 1.0 - beta1**t
    c2 = 1.0 - beta2**t
    new_params, new_m, new_v = [], [], []
    for p, g, m, v in zip(params, grads, state.m, state.v):
        m = beta1 * m + (1.0 - beta1) * g
        v = beta2 * v + (1.0 - beta2) * (g * g)
        m_hat = m / c1
        v_hat = v / c2
        new_params.append(p - lr * m_hat / (np.sqrt(v_hat) + eps))
        new_m.append(m)
        new_v.append(v)
    return new_params, AdamState(step=t, m=new_m, v=new_v)


def train(
    ae: Autoencoder,
    data: np.ndarray,
    cfg: TrainConfig,
    rng: Rng,
) -> tuple[Autoencoder, list[float]]:
    """Mini-batch Adam on the reconstruction loss.

    The input model is not mutated. The last partial batch is used, not
    dropped. Returns the trained model and the per-epoch loss history
    (sample-weighted mean of batch losses).
    """
    cfg.validate()
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[1] != INPUT_DIM:
        raise InputShapeError(f"training data must be (n, {INPUT_DIM}), got {data.shape}")
    n = data.shape[0]
    if n == 0:
        raise EmptyDatasetError("no training samples")

    model = ae.copy()
    params = model.params()
    state = AdamState.for_params(params)
    order = list(range(n))
    history: list[float] = []

    for epoch in range(cfg.epochs):
        lr = learning_rate(cfg, epoch)
        rng.shuffle(order)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            batch_idx = order[start : start + cfg.batch_size]
            batch = data[batch_idx]
            loss, grads = forward_backward(model, batch)
            if not math.isfinite(loss):
                raise DivergenceError(epoch)
            epoch_loss += loss * len(batch_idx)
            params, state = adam_step(
                params, grads, state, lr, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps
            )
            model = Autoencoder(*params, seed=model.seed)
        history.append(epoch_loss / n)
    return model, history
