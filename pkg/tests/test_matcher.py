"""Assignment rules against exhaustive brute-force oracles."""

import math

import numpy as np
import pytest

from embed_router.errors import (
    EmptyIndexError,
    EmptyInputError,
    MissingClassError,
    ZeroVectorError,
)
from embed_router.matcher import (
    CentroidEntry,
    CentroidIndex,
    assign_hierarchical,
    assign_with_rejection,
    build_centroids,
    coarse_assign,
    cosine,
    evaluate_accuracy,
    fine_assign,
    load_index,
    mse_baseline_assign,
    mse_baseline_assign_batch,
    save_index,
)
from embed_router.nn.autoencoder import encode, init_autoencoder, mse_loss, reconstruct


def oracle_cosine(a, b):
    num = sum(x * y for x, y in zip(a, b))
    den = math.sqrt(sum(x * x for x in a)) * math.sqrt(sum(y * y for y in b))
    return num / den


def random_entry(rng, expert_id, n_classes):
    c = rng.normal(size=(n_classes, 128)) + 2.0
    return CentroidEntry(
        expert_id=expert_id, dataset_centroid=c.mean(axis=0), class_centroids=c
    )


def random_index(rng, n_experts, max_classes=10):
    return CentroidIndex(
        entries=[
            random_entry(rng, k, int(rng.integers(1, max_classes + 1)))
            for k in range(n_experts)
        ]
    )


def test_cosine_reference_values():
    v = np.zeros(128)
    v[0] = 1.0
    w = np.zeros(128)
    w[0] = w[1] = 1.0
    assert cosine(v, v) == 1.0
    u = np.zeros(128)
    u[1] = 1.0
    assert cosine(v, u) == 0.0
    assert abs(cosine(v, w) - 1.0 / math.sqrt(2)) < 1e-15
    assert cosine(v, -v) == -1.0


def test_cosine_matches_oracle(rng_values):
    for _ in range(20):
        a = rng_values.normal(size=128)
        b = rng_values.normal(size=128)
        assert abs(cosine(a, b) - oracle_cosine(a, b)) < 1e-12


def test_cosine_zero_vector_raises():
    with pytest.raises(ZeroVectorError):
        cosine(np.zeros(128), np.ones(128))


def test_build_centroids_matches_naive_means(trained_small_ae, small_blobs):
    entry = build_centroids(trained_small_ae, small_blobs, expert_id=7)
    embeddings = np.stack([encode(trained_small_ae, x) for x in small_blobs.x])
    naive_dataset = embeddings.sum(axis=0) / len(small_blobs)
    assert np.allclose(entry.dataset_centroid, naive_dataset, atol=1e-12)
    for cls in range(3):
        rows = embeddings[small_blobs.y == cls]
        assert np.allclose(entry.class_centroids[cls], rows.sum(axis=0) / len(rows),
                           atol=1e-12)
    assert entry.expert_id == 7


def test_build_centroids_empty_dataset(trained_small_ae, small_blobs):
    from embed_router.errors import EmptyDatasetError

    empty = small_blobs.subset(np.array([], dtype=np.int64))
    with pytest.raises(EmptyDatasetError):
        build_centroids(trained_small_ae, empty, expert_id=0)


def test_build_centroids_missing_class(trained_small_ae, small_blobs):
    only_class0 = small_blobs.subset(np.where(small_blobs.y == 0)[0])
    with pytest.raises(MissingClassError):
        build_centroids(trained_small_ae, only_class0, expert_id=0)


def test_two_equal_classes_mean_decomposition(trained_small_ae, small_blobs):
    from embed_router.data.datasets import DatasetSpec, LabeledDataset

    idx = np.concatenate(
        [np.where(small_blobs.y == 0)[0][:20], np.where(small_blobs.y == 1)[0][:20]]
    )
    spec = DatasetSpec(name="pair", source="synthetic", num_classes=2)
    ds = LabeledDataset(x=small_blobs.x[idx], y=small_blobs.y[idx], spec=spec)
    entry = build_centroids(trained_small_ae, ds, expert_id=0)
    recombined = 0.5 * (entry.class_centroids[0] + entry.class_centroids[1])
    assert np.allclose(entry.dataset_centroid, recombined, atol=1e-12)


def test_coarse_assign_exhaustive_oracle(rng_values):
    for _ in range(50):
        index = random_index(rng_values, int(rng_values.integers(1, 8)))
        x = rng_values.normal(size=128)
        got = coarse_assign(x, index)
        scores = [oracle_cosine(x, e.dataset_centroid) for e in index.entries]
        best = max(range(len(scores)), key=lambda i: (scores[i], -index.entries[i].expert_id))
        assert got.expert_id == index.entries[best].expert_id
        assert np.allclose(got.coarse_scores, scores, atol=1e-12)


def test_fine_assign_exhaustive_oracle(rng_values):
    for _ in range(50):
        entry = random_entry(rng_values, 0, int(rng_values.integers(1, 11)))
        x = rng_values.normal(size=128)
        got = fine_assign(x, entry)
        scores = [oracle_cosine(x, c) for c in entry.class_centroids]
        assert got.class_id == int(np.argmax(scores))


def test_single_expert_always_chosen(rng_values):
    index = random_index(rng_values, 1)
    a = coarse_assign(rng_values.normal(size=128), index)
    assert a.expert_id == index.entries[0].expert_id


def test_self_similarity_selects_self(rng_values):
    index = random_index(rng_values, 5)
    for entry in index.entries:
        assert coarse_assign(entry.dataset_centroid, index).expert_id == entry.expert_id


def test_hierarchical_matches_components(rng_values):
    index = random_index(rng_values, 4)
    for _ in range(20):
        x = rng_values.normal(size=128)
        h = assign_hierarchical(x, index)
        c = coarse_assign(x, index)
        f = fine_assign(x, index.get(c.expert_id))
        assert (h.expert_id, h.class_id) == (c.expert_id, f.class_id)


def test_hierarchical_single_expert_single_class(rng_values):
    entry = random_entry(rng_values, 3, 1)
    index = CentroidIndex(entries=[entry])
    a = assign_hierarchical(rng_values.normal(size=128), index)
    assert (a.expert_id, a.class_id) == (3, 0)


def test_scale_invariance(rng_values):
    index = random_index(rng_values, 5)
    x = rng_values.normal(size=128)
    base = assign_hierarchical(x, index)
    for c in (1e-6, 0.5, 3.0, 1e6):
        scaled = assign_hierarchical(c * x, index)
        assert (scaled.expert_id, scaled.class_id) == (base.expert_id, base.class_id)


def test_entry_order_does_not_change_winner(rng_values):
    entries = [random_entry(rng_values, k, 3) for k in range(6)]
    x = rng_values.normal(size=128)
    forward = coarse_assign(x, CentroidIndex(entries=entries)).expert_id
    backward = coarse_assign(x, CentroidIndex(entries=entries[::-1])).expert_id
    assert forward == backward


def test_exact_tie_breaks_to_lowest_id():
    c = np.ones(128)
    entries = [
        CentroidEntry(expert_id=9, dataset_centroid=2 * c, class_centroids=np.stack([2 * c])),
        CentroidEntry(expert_id=4, dataset_centroid=c, class_centroids=np.stack([c])),
    ]
    # same direction, different magnitude: identical cosine for any query
    a = coarse_assign(np.ones(128), CentroidIndex(entries=entries))
    assert a.expert_id == 4


def test_zero_query_ranks_minus_inf_not_error(rng_values):
    index = random_index(rng_values, 3)
    a = coarse_assign(np.zeros(128), index)
    assert np.all(np.isneginf(a.coarse_scores))
    assert a.expert_id == 0  # lowest id among all-tied -inf


def test_rejection_threshold(rng_values):
    index = random_index(rng_values, 3)
    x = rng_values.normal(size=128)
    never = assign_with_rejection(x, index, threshold=-1.0)
    plain = assign_hierarchical(x, index)
    assert not never.rejected
    assert (never.expert_id, never.class_id) == (plain.expert_id, plain.class_id)

    always = assign_with_rejection(x, index, threshold=1.0)
    assert always.rejected and always.expert_id is None and always.class_id is None

    # self-direction scores ~1.0 up to float rounding, clearing any sane floor
    exact = assign_with_rejection(index.entries[1].dataset_centroid, index, threshold=0.999999)
    assert not exact.rejected
    assert exact.expert_id == index.entries[1].expert_id


def test_rejection_orthogonal_query():
    c = np.zeros(128)
    c[0] = 1.0
    entry = CentroidEntry(expert_id=0, dataset_centroid=c, class_centroids=np.stack([c]))
    q = np.zeros(128)
    q[1] = 1.0
    a = assign_with_rejection(q, CentroidIndex(entries=[entry]), threshold=0.5)
    assert a.rejected


def test_empty_index_raises(rng_values):
    with pytest.raises(EmptyIndexError):
        coarse_assign(rng_values.normal(size=128), CentroidIndex())
    with pytest.raises(EmptyIndexError):
        mse_baseline_assign(np.zeros(784), [])


def test_mse_baseline_exhaustive_oracle(rng_values):
    aes = [init_autoencoder(s) for s in range(4)]
    for _ in range(10):
        x = rng_values.random(784)
        errors = [mse_loss(x, reconstruct(ae, x)) for ae in aes]
        assert mse_baseline_assign(x, aes) == int(np.argmin(errors))


def test_mse_baseline_batch_matches_single(rng_values):
    aes = [init_autoencoder(s) for s in range(3)]
    xs = rng_values.random((12, 784))
    batch = mse_baseline_assign_batch(xs, aes)
    assert batch.tolist() == [mse_baseline_assign(x, aes) for x in xs]


def test_mse_baseline_trained_beats_untrained(trained_small_ae, small_blobs):
    untrained = init_autoencoder(1234)
    held_out = small_blobs.x[::7]
    picks = mse_baseline_assign_batch(held_out, [trained_small_ae, untrained])
    assert (picks == 0).mean() >= 0.95


def test_evaluate_accuracy_values():
    assert evaluate_accuracy([1, 2, 3], [1, 2, 3]) == 100.0
    assert evaluate_accuracy([1, 2, 3], [4, 5, 6]) == 0.0
    assert evaluate_accuracy([1, 2, 3, 4], [1, 2, 3, 0]) == 75.0
    with pytest.raises(EmptyInputError):
        evaluate_accuracy([], [])


def test_index_roundtrip(tmp_path, rng_values):
    index = random_index(rng_values, 4)
    path = tmp_path / "c.emci"
    save_index(index, path)
    loaded = load_index(path)
    assert len(loaded) == len(index)
    for a, b in zip(index.entries, loaded.entries):
        assert a.expert_id == b.expert_id
        assert np.array_equal(a.dataset_centroid, b.dataset_centroid)
        assert np.array_equal(a.class_centroids, b.class_centroids)


def test_index_file_rejects_bad_magic(tmp_path, rng_values):
    from embed_router.errors import FormatError

    path = tmp_path / "c.emci"
    save_index(random_index(rng_values, 2), path)
    blob = bytearray(path.read_bytes())
    blob[:4] = b"NOPE"
    path.write_bytes(bytes(blob))
    with pytest.raises(FormatError):
        load_index(path)


def test_index_file_rejects_truncation_and_trailing(tmp_path, rng_values):
    from embed_router.errors import FormatError

    path = tmp_path / "c.emci"
    save_index(random_index(rng_values, 2), path)
    blob = path.read_bytes()
    path.write_bytes(blob[:-5])
    with pytest.raises(FormatError):
        load_index(path)
    path.write_bytes(blob + b"\x00")
    with pytest.raises(FormatError):
        load_index(path)


def test_index_rejects_duplicate_ids(rng_values):
    from embed_router.errors import InputShapeError

    e = random_entry(rng_values, 1, 2)
    with pytest.raises(InputShapeError):
        CentroidIndex(entries=[e, e])


def test_index_register_overwrites(rng_values):
    index = CentroidIndex(entries=[random_entry(rng_values, 0, 2)])
    replacement = random_entry(rng_values, 0, 5)
    updated = index.register(replacement)
    assert len(updated) == 1
    assert updated.get(0).class_count == 5
    assert index.get(0).class_count == 2  # original snapshot untouched


def test_assignment_scores_in_range(rng_values):
    index = random_index(rng_values, 6)
    for _ in range(30):
        a = assign_hierarchical(rng_values.normal(size=128) * 1e6, index)
        assert np.all(a.coarse_scores <= 1.0) and np.all(a.coarse_scores >= -1.0)
        assert np.all(a.fine_scores <= 1.0) and np.all(a.fine_scores >= -1.0)
