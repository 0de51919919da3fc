"""IDX file ingestion (the classic big-endian image/label container).

Pixels are scaled by 1/255 into [0, 1] and 28x28 images flattened row-major
to 784 features. Gzipped files are read transparently.
"""

from __future__ import annotations

import gzip
import struct
from pathlib import Path

import numpy as np

from embed_router.errors import FormatError

IMAGE_MAGIC = 0x00000803
LABEL_MAGIC = 0x00000801


def _open(path: str | Path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "rb")
    return open(path, "rb")


def _read_u32(f, what: str) -> int:
    raw = f.read(4)
    if len(raw) != 4:
        raise FormatError(f"unexpected end of file reading {what}")
    return struct.unpack(">I", raw)[0]


def read_idx_images(path: str | Path) -> np.ndarray:
    """Raw images as uint8, shape (count, rows, cols)."""
    with _open(path) as f:
        magic = _read_u32(f, "image magic")
        if magic != IMAGE_MAGIC:
            raise FormatError(f"bad image magic 0x{magic:08x}")
        count = _read_u32(f, "image count")
        rows = _read_u32(f, "row count")
        cols = _read_u32(f, "column count")
        raw = f.read(count * rows * cols)
        if len(raw) != count * rows * cols:
            raise FormatError("image data truncated")
        return np.frombuffer(raw, dtype=np.uint8).reshape(count, rows, cols)


def read_idx_labels(path: str | Path) -> np.ndarray:
    with _open(path) as f:
        magic = _read_u32(f, "label magic")
        if magic != LABEL_MAGIC:
            raise FormatError(f"bad label magic 0x{magic:08x}")
        count = _read_u32(f, "label count")
        raw = f.read(count)
        if len(raw) != count:
            raise FormatError("label data truncated")
        return np.frombuffer(raw, dtype=np.uint8).astype(np.int64)


def load_idx(images_path: str | Path, labels_path: str | Path):
    """Paired image/label files as a LabeledDataset with 784-dim rows."""
    from embed_router.data.datasets import DatasetSpec, LabeledDataset

    images = read_idx_images(images_path)
    labels = read_idx_labels(labels_path)
    if images.shape[0] != labels.shape[0]:
        raise FormatError(
            f"count mismatch: {images.shape[0]} images vs {labels.shape[0]} labels"
        )
    n, rows, cols = images.shape
    x = images.reshape(n, rows * cols).astype(np.float64) / 255.0
    if rows * cols != 784:
        from embed_router.data.preprocess import resize_to_28

        # area resize preserves [0,1] mathematically; clip off float round-off
        x = np.clip(
            np.stack([resize_to_28(img) for img in images.astype(np.float64) / 255.0]), 0.0, 1.0
        )
    num_classes = int(labels.max()) + 1 if n else 0
    spec = DatasetSpec(
        name=Path(images_path).name.split(".")[0],
        source="idx_files",
        num_classes=num_classes,
        dims=rows * cols,
        params={"images": str(images_path), "labels": str(labels_path)},
    )
    return LabeledDataset(x=x, y=labels, spec=spec)


def write_idx_images(path: str | Path, images: np.ndarray) -> None:
    """Images as uint8 (n, rows, cols) in IDX layout; used by the corpus
    generator and tests."""
    images = np.asarray(images, dtype=np.uint8)
    n, rows, cols = images.shape
    with _open_write(path) as f:
        f.write(struct.pack(">IIII", IMAGE_MAGIC, n, rows, cols))
        f.write(images.tobytes())


def write_idx_labels(path: str | Path, labels: np.ndarray) -> None:
    labels = np.asarray(labels, dtype=np.uint8)
    with _open_write(path) as f:
        f.write(struct.pack(">II", LABEL_MAGIC, labels.shape[0]))
        f.write(labels.tobytes())


def _open_write(path: str | Path):
    path = Path(path)
    if path.suffix == ".gz":
        return gzip.open(path, "wb")
    return open(path, "wb")
