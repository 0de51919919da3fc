"""Seeded synthetic datasets: per-class prototypes plus Gaussian noise.

Each class gets one random prototype; samples are the prototype plus
N(0, sigma) noise, clamped back into [0, 1]. Prototypes are sparse by
default (a random support of bright coordinates over a dark background,
like normalized image data): dense uniform vectors in the positive
orthant are all nearly parallel, which would make cosine-based routing
degenerate no matter how far apart the prototypes sit in Euclidean terms.
Fully determined by (spec, seed).
"""

from __future__ import annotations

import numpy as np

from embed_router.data.datasets import DatasetSpec, LabeledDataset
from embed_router.data.preprocess import adaptive_avg_pool_1d
from embed_router.errors import ParamError
from embed_router.rng import derive_seed, uniform_block, normal_block

_PROTO_TAG = 0x70
_NOISE_TAG = 0x71
_SUPPORT_TAG = 0x72
_BASE_TAG = 0x73
_BASE_SUPPORT_TAG = 0x74

DEFAULT_DENSITY = 0.2
_BRIGHT_RANGE = (0.55, 1.0)  # class-specific values on the support
_BASE_RANGE = (0.25, 0.45)  # dataset-wide values on the shared support


def _sparse(seed: int, dims: int, density: float, value_range: tuple[float, float],
            value_tag: int, support_tag: int) -> np.ndarray:
    values = uniform_block(derive_seed(seed, value_tag), dims)
    lo, hi = value_range
    scaled = lo + (hi - lo) * values
    if density >= 1.0:
        return scaled
    gate = uniform_block(derive_seed(seed, support_tag), dims)
    return np.where(gate < density, scaled, 0.0)


def _prototype(seed: int, cls: int, dims: int, density: float) -> np.ndarray:
    """Class prototype: a dataset-wide sparse base pattern shared by all
    classes plus a brighter class-specific support. The shared base keeps
    the dataset's mean embedding distinctive (coarse routing), the class
    part separates classes within it (fine routing). density = 1
    degenerates to a dense uniform vector."""
    if density >= 1.0:
        return uniform_block(derive_seed(seed, _PROTO_TAG, cls), dims)
    base = _sparse(seed, dims, density, _BASE_RANGE, _BASE_TAG, _BASE_SUPPORT_TAG)
    cls_seed = derive_seed(seed, cls)
    part = _sparse(cls_seed, dims, density, _BRIGHT_RANGE, _PROTO_TAG, _SUPPORT_TAG)
    return np.clip(base + part, 0.0, 1.0)


def synth_dataset(spec: DatasetSpec, seed: int) -> LabeledDataset:
    spec.validate()
    sigma = float(spec.params.get("sigma", 0.1))
    per_class = int(spec.params.get("samples_per_class", 200))
    density = float(spec.params.get("density", DEFAULT_DENSITY))
    if sigma < 0:
        raise ParamError("sigma must be >= 0")
    if per_class < 1:
        raise ParamError("samples_per_class must be >= 1")
    if not 0.0 < density <= 1.0:
        raise ParamError("density must lie in (0, 1]")

    dims = spec.dims
    xs, ys = [], []
    for cls in range(spec.num_classes):
        proto = _prototype(seed, cls, dims, density)
        if sigma > 0:
            noise = normal_block(
                derive_seed(seed, _NOISE_TAG, cls), per_class * dims, sigma=sigma
            ).reshape(per_class, dims)
            samples = np.clip(proto + noise, 0.0, 1.0)
        else:
            samples = np.tile(proto, (per_class, 1))
        xs.append(samples)
        ys.append(np.full(per_class, cls, dtype=np.int64))

    x = np.concatenate(xs)
    if dims != 784:
        # pooling preserves [0,1] mathematically; clip off float round-off
        x = np.clip(np.stack([adaptive_avg_pool_1d(row) for row in x]), 0.0, 1.0)
    return LabeledDataset(x=x, y=np.concatenate(ys), spec=spec)
