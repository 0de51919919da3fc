"""Preprocessing: everything becomes a 784-dim vector in [0, 1]."""

from __future__ import annotations

import numpy as np

from embed_router.errors import EmptyInputError, InputShapeError

TARGET_DIM = 784
TARGET_SIDE = 28


def adaptive_avg_pool_1d(x: np.ndarray, out_len: int = TARGET_DIM) -> np.ndarray:
    """Adaptive average pooling: bin i averages x[floor(i*L/out) : ceil((i+1)*L/out)].

    Shorter inputs repeat elements across bins, longer inputs average them;
    out_len == L is the identity.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise InputShapeError(f"expected a 1-d input, got shape {x.shape}")
    length = x.shape[0]
    if length == 0:
        raise EmptyInputError("cannot pool an empty input")
    if length == out_len:
        return x.copy()
    i = np.arange(out_len)
    starts = (i * length) // out_len
    ends = -((-(i + 1) * length) // out_len)  # ceil division
    csum = np.concatenate([[0.0], np.cumsum(x)])
    return (csum[ends] - csum[starts]) / (ends - starts)


def _pool_axis(img: np.ndarray, out: int, axis: int) -> np.ndarray:
    moved = np.moveaxis(img, axis, 0)
    length = moved.shape[0]
    i = np.arange(out)
    starts = (i * length) // out
    ends = -((-(i + 1) * length) // out)
    csum = np.concatenate([np.zeros((1,) + moved.shape[1:]), np.cumsum(moved, axis=0)])
    pooled = (csum[ends] - csum[starts]) / (ends - starts)[:, None]
    return np.moveaxis(pooled, 0, axis)


def resize_to_28(image: np.ndarray) -> np.ndarray:
    """Area-average a grayscale H x W image down (or up) to 28 x 28 and
    flatten row-major to 784. Values stay within the input's range."""
    image = np.asarray(image, dtype=np.float64)
    if image.ndim != 2 or image.shape[0] < 1 or image.shape[1] < 1:
        raise InputShapeError(f"expected a 2-d image, got shape {image.shape}")
    pooled = _pool_axis(_pool_axis(image, TARGET_SIDE, 0), TARGET_SIDE, 1)
    return pooled.reshape(TARGET_DIM)
