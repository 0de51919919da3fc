"""Centroid construction and coarse/fine expert assignment.

Each expert carries one dataset centroid (the mean embedding of its whole
corpus) and one centroid per class. A query embedding is assigned coarsely
to the expert whose dataset centroid has maximum cosine similarity, then
fine-grained to the class centroid with maximum cosine similarity inside
that expert. Ties break toward the lowest id so results never depend on
entry order, and zero-norm embeddings rank at -inf instead of raising so a
dead query cannot take the registry down.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from embed_router.data.datasets import LabeledDataset
from embed_router.errors import (
    EmptyDatasetError,
    EmptyIndexError,
    EmptyInputError,
    FormatError,
    InputShapeError,
    MissingClassError,
    ZeroVectorError,
)
from embed_router.nn.autoencoder import Autoencoder, encode_batch

EMBED_DIM = 128

INDEX_MAGIC = b"EMCI"
INDEX_VERSION = 1


@dataclass(frozen=True)
class CentroidEntry:
    """One expert: its dataset centroid and per-class centroids.

    Centroids are stored unnormalized (plain means); cosine handles the
    normalization at query time.
    """

    expert_id: int
    dataset_centroid: np.ndarray  # (128,)
    class_centroids: np.ndarray  # (num_classes, 128)

    @property
    def class_count(self) -> int:
        return self.class_centroids.shape[0]

    def validate(self) -> None:
        if self.dataset_centroid.shape != (EMBED_DIM,):
            raise InputShapeError("dataset centroid must have length 128")
        if self.class_centroids.ndim != 2 or self.class_centroids.shape[1] != EMBED_DIM:
            raise InputShapeError("class centroids must be (n, 128)")
        if self.class_count < 1:
            raise InputShapeError("an expert needs at least one class centroid")


@dataclass
class CentroidIndex:
    """Registry of experts; expert ids are unique.

    register() returns a new index (copy-on-write), so a reference to an
    index is always a consistent snapshot safe for concurrent readers.
    """

    entries: list[CentroidEntry] = field(default_factory=list)

    def __post_init__(self):
        ids = [e.expert_id for e in self.entries]
        if len(set(ids)) != len(ids):
            raise InputShapeError("duplicate expert ids in index")
        for entry in self.entries:
            entry.validate()

    def __len__(self) -> int:
        return len(self.entries)

    def get(self, expert_id: int) -> CentroidEntry:
        for entry in self.entries:
            if entry.expert_id == expert_id:
                return entry
        raise KeyError(expert_id)

    def register(self, entry: CentroidEntry) -> "CentroidIndex":
        """New index with the entry added, replacing any same-id entry."""
        entry.validate()
        kept = [e for e in self.entries if e.expert_id != entry.expert_id]
        return CentroidIndex(entries=kept + [entry])


@dataclass
class Assignment:
    """Outcome of coarse and (optionally) fine assignment.

    coarse_scores aligns with the index entry order of the queried
    snapshot; the winner is identified by expert_id, not position.
    """

    expert_id: int | None
    class_id: int | None
    coarse_scores: np.ndarray | None
    fine_scores: np.ndarray | None = None
    rejected: bool = False


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    """dot(a, b) / (|a| |b|), clipped into [-1, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape or a.ndim != 1:
        raise InputShapeError(f"vectors must share one dimension, got {a.shape} vs {b.shape}")
    norm_a = float(np.linalg.norm(a))
    norm_b = float(np.linalg.norm(b))
    if norm_a == 0.0 or norm_b == 0.0:
        raise ZeroVectorError("cosine undefined for a zero-norm vector")
    return float(np.clip(np.dot(a, b) / (norm_a * norm_b), -1.0, 1.0))


def _ranking_scores(x: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    """Cosine of x against each centroid row; undefined pairs score -inf."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (EMBED_DIM,):
        raise InputShapeError(f"query embedding must have length {EMBED_DIM}")
    norm_x = np.linalg.norm(x)
    norms = np.linalg.norm(centroids, axis=1)
    scores = np.full(centroids.shape[0], -np.inf)
    if norm_x == 0.0:
        return scores
    ok = norms > 0.0
    scores[ok] = np.clip(centroids[ok] @ x / (norms[ok] * norm_x), -1.0, 1.0)
    return scores


def _winner(ids: list[int], scores: np.ndarray) -> int:
    """Lowest id among the max-score entries (order independent)."""
    best = np.max(scores)
    return min(i for i, s in zip(ids, scores) if s == best)


def build_centroids(ae: Autoencoder, ds: LabeledDataset, expert_id: int) -> CentroidEntry:
    """Mean embedding of the whole dataset plus one mean per class."""
    if len(ds) == 0:
        raise EmptyDatasetError("cannot build centroids from an empty dataset")
    emb = encode_batch(ae, ds.x)
    class_centroids = np.empty((ds.spec.num_classes, EMBED_DIM))
    for cls in range(ds.spec.num_classes):
        mask = ds.y == cls
        if not mask.any():
            raise MissingClassError(f"class {cls} has no samples")
        class_centroids[cls] = emb[mask].mean(axis=0)
    return CentroidEntry(
        expert_id=expert_id,
        dataset_centroid=emb.mean(axis=0),
        class_centroids=class_centroids,
    )


def coarse_assign(x: np.ndarray, index: CentroidIndex) -> Assignment:
    """Pick the expert whose dataset centroid is most cosine-similar."""
    if len(index) == 0:
        raise EmptyIndexError("no experts registered")
    centroids = np.stack([e.dataset_centroid for e in index.entries])
    scores = _ranking_scores(x, centroids)
    ids = [e.expert_id for e in index.entries]
    return Assignment(expert_id=_winner(ids, scores), class_id=None, coarse_scores=scores)


def fine_assign(x: np.ndarray, entry: CentroidEntry) -> Assignment:
    """Pick the most cosine-similar class centroid inside one expert."""
    scores = _ranking_scores(x, entry.class_centroids)
    class_id = _winner(list(range(entry.class_count)), scores)
    return Assignment(
        expert_id=entry.expert_id, class_id=class_id, coarse_scores=None, fine_scores=scores
    )


def assign_hierarchical(x: np.ndarray, index: CentroidIndex) -> Assignment:
    """Coarse assignment, then fine assignment within the chosen expert."""
    coarse = coarse_assign(x, index)
    fine = fine_assign(x, index.get(coarse.expert_id))
    return Assignment(
        expert_id=coarse.expert_id,
        class_id=fine.class_id,
        coarse_scores=coarse.coarse_scores,
        fine_scores=fine.fine_scores,
    )


def assign_with_rejection(x: np.ndarray, index: CentroidIndex, threshold: float) -> Assignment:
    """Hierarchical assignment that declares no-match below a similarity floor.

    threshold <= -1 disables rejection entirely (cosine never goes lower),
    making this identical to assign_hierarchical.
    """
    if threshold <= -1.0:
        return assign_hierarchical(x, index)
    coarse = coarse_assign(x, index)
    if np.max(coarse.coarse_scores) < threshold:
        return Assignment(
            expert_id=None,
            class_id=None,
            coarse_scores=coarse.coarse_scores,
            rejected=True,
        )
    fine = fine_assign(x, index.get(coarse.expert_id))
    return Assignment(
        expert_id=coarse.expert_id,
        class_id=fine.class_id,
        coarse_scores=coarse.coarse_scores,
        fine_scores=fine.fine_scores,
    )


def mse_baseline_assign(x_raw: np.ndarray, server_aes: list[Autoencoder]) -> int:
    """Raw-data baseline: the expert whose autoencoder reconstructs the
    sample with minimum MSE. Ties go to the lowest index."""
    from embed_router.nn.autoencoder import mse_loss, reconstruct

    if not server_aes:
        raise EmptyIndexError("no server autoencoders")
    errors = [mse_loss(x_raw, reconstruct(ae, x_raw)) for ae in server_aes]
    best = min(errors)
    return errors.index(best)


def mse_baseline_assign_batch(x_raw: np.ndarray, server_aes: list[Autoencoder]) -> np.ndarray:
    """Vectorized mse_baseline_assign over the rows of x_raw."""
    from embed_router.nn.autoencoder import decode_batch, encode_batch

    if not server_aes:
        raise EmptyIndexError("no server autoencoders")
    x_raw = np.asarray(x_raw, dtype=np.float64)
    errors = np.stack(
        [
            np.mean((decode_batch(ae, encode_batch(ae, x_raw)) - x_raw) ** 2, axis=1)
            for ae in server_aes
        ]
    )
    return np.argmin(errors, axis=0)


def evaluate_accuracy(assignments, ground_truth) -> float:
    """Percentage of elementwise matches."""
    if len(assignments) != len(ground_truth):
        raise InputShapeError("assignments and ground truth differ in length")
    if len(assignments) == 0:
        raise EmptyInputError("nothing to score")
    matches = sum(1 for a, t in zip(assignments, ground_truth) if a == t)
    return 100.0 * matches / len(assignments)


_INDEX_HEADER = struct.Struct("<4sHI")
_ENTRY_HEADER = struct.Struct("<II")


def save_index(index: CentroidIndex, path: str | Path) -> None:
    """Binary index file: magic, version, entry count, then per entry the
    expert id, class count, dataset centroid, and class centroids as
    little-endian float64."""
    with open(path, "wb") as f:
        f.write(_INDEX_HEADER.pack(INDEX_MAGIC, INDEX_VERSION, len(index)))
        for e in index.entries:
            f.write(_ENTRY_HEADER.pack(e.expert_id, e.class_count))
            f.write(np.ascontiguousarray(e.dataset_centroid, dtype="<f8").tobytes())
            f.write(np.ascontiguousarray(e.class_centroids, dtype="<f8").tobytes())


def load_index(path: str | Path) -> CentroidIndex:
    with open(path, "rb") as f:
        head = f.read(_INDEX_HEADER.size)
        if len(head) < _INDEX_HEADER.size:
            raise FormatError("index file too short for header")
        magic, version, count = _INDEX_HEADER.unpack(head)
        if magic != INDEX_MAGIC:
            raise FormatError(f"bad index magic {magic!r}")
        if version != INDEX_VERSION:
            raise FormatError(f"unsupported index version {version}")
        entries = []
        for _ in range(count):
            raw = f.read(_ENTRY_HEADER.size)
            if len(raw) < _ENTRY_HEADER.size:
                raise FormatError("index file truncated in entry header")
            expert_id, n_classes = _ENTRY_HEADER.unpack(raw)
            need = (1 + n_classes) * EMBED_DIM * 8
            raw = f.read(need)
            if len(raw) != need:
                raise FormatError("index file truncated in centroid data")
            vecs = np.frombuffer(raw, dtype="<f8").astype(np.float64)
            entries.append(
                CentroidEntry(
                    expert_id=expert_id,
                    dataset_centroid=vecs[:EMBED_DIM],
                    class_centroids=vecs[EMBED_DIM:].reshape(n_classes, EMBED_DIM),
                )
            )
        if f.read(1):
            raise FormatError("trailing bytes after index entries")
    return CentroidIndex(entries=entries)
