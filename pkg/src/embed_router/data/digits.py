"""Deterministic 28x28 digit-glyph corpus, written as IDX files.

Stands in for the standard 10k handwritten-digit test corpus when the real
IDX files are not present in the data directory. Ten stroke-based glyphs
are rendered with per-sample rotation, scale, shift, intensity jitter, and
pixel noise, using the package RNG only, so every build of the corpus is
byte-identical. The per-class counts copy the standard test corpus exactly
(largest/smallest class 11.35%/8.92%), which keeps the 50/25/25 split at
5000/2500/2500.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from embed_router.data.idx import write_idx_images, write_idx_labels
from embed_router.rng import Rng, derive_seed, normal_block

CORPUS_SEED = 0x0D161757
CLASS_COUNTS = [980, 1135, 1032, 1010, 982, 892, 958, 1028, 974, 1009]

IMAGES_NAME = "digits10k-images-idx3-ubyte"
LABELS_NAME = "digits10k-labels-idx1-ubyte"

SIDE = 28
_CENTER = (SIDE - 1) / 2.0

# stroke geometry (pixel units) and per-sample jitter ranges
STROKE_HALF_WIDTH = 1.25
STROKE_SOFT_EDGE = 1.3
NOISE_SIGMA = 0.16
MAX_ROTATION = 0.19
SCALE_RANGE = (0.83, 1.14)
MAX_SHIFT = 2.0
INTENSITY_RANGE = (0.70, 1.00)

_NOISE_TAG = 0x4E

# glyph corners on the canvas: a 10-wide, 16-tall box
_L, _R = 9.0, 19.0
_T, _M, _B = 6.0, 14.0, 22.0

#: line segments ((x1, y1), (x2, y2)) per digit, y growing downward
GLYPH_SEGMENTS: dict[int, list[tuple[tuple[float, float], tuple[float, float]]]] = {
    0: [((_L, _T), (_R, _T)), ((_R, _T), (_R, _B)), ((_R, _B), (_L, _B)), ((_L, _B), (_L, _T))],
    1: [((14.0, _T), (14.0, _B)), ((11.0, 9.0), (14.0, _T))],
    2: [((_L, _T), (_R, _T)), ((_R, _T), (_R, _M)), ((_R, _M), (_L, _M)),
        ((_L, _M), (_L, _B)), ((_L, _B), (_R, _B))],
    3: [((_L, _T), (_R, _T)), ((_R, _T), (_R, _M)), ((12.0, _M), (_R, _M)),
        ((_R, _M), (_R, _B)), ((_L, _B), (_R, _B))],
    4: [((_L, _T), (_L, _M)), ((_L, _M), (_R, _M)), ((_R, _T), (_R, _B))],
    5: [((_R, _T), (_L, _T)), ((_L, _T), (_L, _M)), ((_L, _M), (_R, _M)),
        ((_R, _M), (_R, _B)), ((_R, _B), (_L, _B))],
    6: [((_R, _T), (_L, _T)), ((_L, _T), (_L, _B)), ((_L, _B), (_R, _B)),
        ((_R, _B), (_R, _M)), ((_R, _M), (_L, _M))],
    7: [((_L, _T), (_R, _T)), ((_R, _T), (12.0, _B))],
    8: [((_L, _T), (_R, _T)), ((_R, _T), (_R, _B)), ((_R, _B), (_L, _B)),
        ((_L, _B), (_L, _T)), ((_L, _M), (_R, _M))],
    9: [((_R, _M), (_L, _M)), ((_L, _M), (_L, _T)), ((_L, _T), (_R, _T)),
        ((_R, _T), (_R, _B))],
}

_GRID_X, _GRID_Y = np.meshgrid(np.arange(SIDE, dtype=np.float64),
                               np.arange(SIDE, dtype=np.float64), indexing="xy")
_PIXELS = np.stack([_GRID_X.ravel(), _GRID_Y.ravel()], axis=1)  # (784, 2)


def _segment_distances(points: np.ndarray, segments: np.ndarray) -> np.ndarray:
    """Min distance from each point to any of the segments.

    points (P, 2), segments (S, 2, 2) -> (P,).
    """
    a = segments[:, 0, :]  # (S, 2)
    b = segments[:, 1, :]
    ab = b - a
    ap = points[None, :, :] - a[:, None, :]  # (S, P, 2)
    denom = np.maximum((ab * ab).sum(axis=1), 1e-12)
    t = np.clip((ap * ab[:, None, :]).sum(axis=2) / denom[:, None], 0.0, 1.0)
    closest = a[:, None, :] + t[:, :, None] * ab[:, None, :]
    d = np.linalg.norm(points[None, :, :] - closest, axis=2)
    return d.min(axis=0)


def render_digit(
    digit: int,
    rotation: float = 0.0,
    scale: float = 1.0,
    shift: tuple[float, float] = (0.0, 0.0),
    intensity: float = 1.0,
) -> np.ndarray:
    """One 28x28 glyph image in [0, 1] under the given affine jitter."""
    segments = np.asarray(GLYPH_SEGMENTS[digit], dtype=np.float64)
    # map pixel coords back into glyph space (inverse of scale+rotate+shift)
    p = _PIXELS - np.array([_CENTER + shift[0], _CENTER + shift[1]])
    cos_t, sin_t = np.cos(-rotation), np.sin(-rotation)
    rot = np.array([[cos_t, -sin_t], [sin_t, cos_t]])
    g = (p @ rot.T) / scale + _CENTER
    dist = _segment_distances(g, segments) * scale
    ink = np.clip((STROKE_HALF_WIDTH + STROKE_SOFT_EDGE - dist) / STROKE_SOFT_EDGE, 0.0, 1.0)
    return (intensity * ink).reshape(SIDE, SIDE)


def generate_digits_corpus(seed: int = CORPUS_SEED) -> tuple[np.ndarray, np.ndarray]:
    """The full 10000-image corpus as (uint8 images (n,28,28), labels)."""
    rng = Rng(seed)
    labels = np.repeat(np.arange(10, dtype=np.int64), CLASS_COUNTS)
    order = list(range(labels.shape[0]))
    rng.shuffle(order)
    labels = labels[np.array(order)]

    images = np.empty((labels.shape[0], SIDE, SIDE), dtype=np.uint8)
    for i, digit in enumerate(labels):
        rotation = rng.uniform(-MAX_ROTATION, MAX_ROTATION)
        scale = rng.uniform(*SCALE_RANGE)
        shift = (rng.uniform(-MAX_SHIFT, MAX_SHIFT), rng.uniform(-MAX_SHIFT, MAX_SHIFT))
        intensity = rng.uniform(*INTENSITY_RANGE)
        img = render_digit(int(digit), rotation, scale, shift, intensity)
        noise = normal_block(derive_seed(seed, _NOISE_TAG, i), SIDE * SIDE, sigma=NOISE_SIGMA)
        img = np.clip(img + noise.reshape(SIDE, SIDE), 0.0, 1.0)
        images[i] = np.round(img * 255.0).astype(np.uint8)
    return images, labels


def ensure_digits_corpus(data_dir: str | Path) -> tuple[Path, Path]:
    """Generate the corpus into data_dir unless it is already there.

    Returns the (images, labels) file paths."""
    data_dir = Path(data_dir)
    images_path = data_dir / IMAGES_NAME
    labels_path = data_dir / LABELS_NAME
    if images_path.is_file() and labels_path.is_file():
        return images_path, labels_path

    data_dir.mkdir(parents=True, exist_ok=True)
    images, labels = generate_digits_corpus()
    write_idx_images(images_path, images)
    write_idx_labels(labels_path, labels)
    (data_dir / "digits10k-README.txt").write_text(
        "Synthetic stand-in digit corpus, generated deterministically by\n"
        f"embed_router.data.digits (seed 0x{CORPUS_SEED:08X}). 10000 samples,\n"
        "10 classes with the standard test-corpus class balance. Place real\n"
        "t10k-*-ubyte IDX files in this directory to use them instead.\n"
    )
    return images_path, labels_path
