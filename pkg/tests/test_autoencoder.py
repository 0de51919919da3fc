"""Forward pass, loss, and model file format against naive oracles."""

import math

import numpy as np
import pytest

from embed_router.errors import FormatError, InputShapeError
from embed_router.nn.autoencoder import (
    HIDDEN_DIM,
    INPUT_DIM,
    Autoencoder,
    decode,
    encode,
    encode_batch,
    init_autoencoder,
    load_model,
    mse_loss,
    reconstruct,
    save_model,
)


def oracle_matvec(w, x, b):
    out = []
    for i in range(w.shape[0]):
        acc = 0.0
        for j in range(w.shape[1]):
            acc += w[i, j] * x[j]
        out.append(acc + b[i])
    return np.array(out)


def test_init_deterministic_and_seed_sensitive():
    a, b = init_autoencoder(0), init_autoencoder(0)
    for pa, pb in zip(a.params(), b.params()):
        assert np.array_equal(pa, pb)
    c = init_autoencoder(1)
    assert any(not np.array_equal(pa, pc) for pa, pc in zip(a.params(), c.params()))
    assert any(
        not np.array_equal(pc, pd)
        for pc, pd in zip(init_autoencoder(1).params(), init_autoencoder(2).params())
    )


def test_init_bounds():
    ae = init_autoencoder(0)
    enc_bound = 1.0 / math.sqrt(INPUT_DIM)
    dec_bound = 1.0 / math.sqrt(HIDDEN_DIM)
    assert np.abs(ae.w_enc).max() <= enc_bound
    assert np.abs(ae.b_enc).max() <= enc_bound
    assert np.abs(ae.w_dec).max() <= dec_bound
    assert np.abs(ae.b_dec).max() <= dec_bound
    assert ae.w_enc.shape == (HIDDEN_DIM, INPUT_DIM)
    assert ae.w_dec.shape == (INPUT_DIM, HIDDEN_DIM)


def test_encode_zero_input_zero_bias():
    ae = init_autoencoder(3)
    ae = Autoencoder(ae.w_enc, np.zeros(HIDDEN_DIM), ae.w_dec, ae.b_dec, ae.seed)
    assert np.array_equal(encode(ae, np.zeros(INPUT_DIM)), np.zeros(HIDDEN_DIM))


def test_encode_selector_rows_pass_one_hot_through():
    w_enc = np.zeros((HIDDEN_DIM, INPUT_DIM))
    w_enc[np.arange(HIDDEN_DIM), np.arange(HIDDEN_DIM)] = 1.0
    ae = Autoencoder(w_enc, np.zeros(HIDDEN_DIM), np.zeros((INPUT_DIM, HIDDEN_DIM)),
                     np.zeros(INPUT_DIM), 0)
    x = np.zeros(INPUT_DIM)
    x[5] = 1.0
    h = encode(ae, x)
    expected = np.zeros(HIDDEN_DIM)
    expected[5] = 1.0
    assert np.array_equal(h, expected)


def test_encode_matches_triple_loop_oracle(rng_values):
    ae = init_autoencoder(12)
    x = rng_values.random(INPUT_DIM)
    expected = np.maximum(oracle_matvec(ae.w_enc, x, ae.b_enc), 0.0)
    assert np.allclose(encode(ae, x), expected, rtol=0, atol=1e-12)


def test_decode_matches_triple_loop_oracle(rng_values):
    ae = init_autoencoder(12)
    h = rng_values.random(HIDDEN_DIM)
    pre = oracle_matvec(ae.w_dec, h, ae.b_dec)
    expected = 1.0 / (1.0 + np.exp(-pre))
    got = decode(ae, h)
    assert np.allclose(got, expected, rtol=0, atol=1e-12)
    assert got.min() > 0.0 and got.max() < 1.0


def test_decode_zero_hidden_zero_bias_gives_half():
    ae = init_autoencoder(3)
    ae = Autoencoder(ae.w_enc, ae.b_enc, ae.w_dec, np.zeros(INPUT_DIM), ae.seed)
    assert np.allclose(decode(ae, np.zeros(HIDDEN_DIM)), 0.5)


def test_encode_batch_matches_single(rng_values):
    ae = init_autoencoder(4)
    xs = rng_values.random((7, INPUT_DIM))
    batch = encode_batch(ae, xs)
    for i in range(7):
        assert np.allclose(batch[i], encode(ae, xs[i]), atol=1e-12)


def test_shape_errors():
    ae = init_autoencoder(0)
    with pytest.raises(InputShapeError):
        encode(ae, np.zeros(783))
    with pytest.raises(InputShapeError):
        decode(ae, np.zeros(127))
    with pytest.raises(InputShapeError):
        mse_loss(np.zeros(784), np.zeros(783))


def test_mse_loss_values():
    assert mse_loss(np.ones(784), np.ones(784)) == 0.0
    assert mse_loss(np.ones(784), np.zeros(784)) == 1.0
    x = np.zeros(784)
    x[0] = 1.0
    assert abs(mse_loss(x, np.zeros(784)) - 1.0 / 784.0) < 1e-15


def test_reconstruct_composes(rng_values):
    ae = init_autoencoder(9)
    x = rng_values.random(INPUT_DIM)
    assert np.array_equal(reconstruct(ae, x), decode(ae, encode(ae, x)))


def test_model_roundtrip(tmp_path):
    ae = init_autoencoder(777)
    path = tmp_path / "m.emae"
    save_model(ae, path)
    loaded = load_model(path)
    assert loaded.seed == ae.seed
    for pa, pb in zip(ae.params(), loaded.params()):
        assert np.array_equal(pa, pb)


def test_model_rejects_bad_magic_and_truncation(tmp_path):
    ae = init_autoencoder(1)
    path = tmp_path / "m.emae"
    save_model(ae, path)
    raw = path.read_bytes()

    bad = tmp_path / "bad.emae"
    bad.write_bytes(b"XXXX" + raw[4:])
    with pytest.raises(FormatError):
        load_model(bad)

    trunc = tmp_path / "trunc.emae"
    trunc.write_bytes(raw[: len(raw) // 2])
    with pytest.raises(FormatError):
        load_model(trunc)

    extra = tmp_path / "extra.emae"
    extra.write_bytes(raw + b"\x00")
    with pytest.raises(FormatError):
        load_model(extra)
