"""Single-hidden-layer MLP autoencoder (784 -> 128 -> 784).

The 128-dim relu hidden layer is the embedding that clients share with the
registry; the sigmoid output reconstructs the [0,1]-normalized input. All
math is float64. Weight layout is fixed so that equal seeds give bit-equal
parameters: encoder weight rows first, then encoder bias, decoder weight
rows, decoder bias, each drawn U(-1/sqrt(fan_in), +1/sqrt(fan_in)).
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from embed_router.errors import FormatError, InputShapeError, ZeroEmbeddingError
from embed_router.rng import Rng

INPUT_DIM = 784
HIDDEN_DIM = 128

MODEL_MAGIC = b"EMAE"
MODEL_VERSION = 1


@dataclass
class Autoencoder:
    """Parameter container; treated as immutable once trained."""

    w_enc: np.ndarray  # (128, 784)
    b_enc: np.ndarray  # (128,)
    w_dec: np.ndarray  # (784, 128)
    b_dec: np.ndarray  # (784,)
    seed: int

    def params(self) -> list[np.ndarray]:
        return [self.w_enc, self.b_enc, self.w_dec, self.b_dec]

    def copy(self) -> "Autoencoder":
        return Autoencoder(
            self.w_enc.copy(), self.b_enc.copy(), self.w_dec.copy(), self.b_dec.copy(), self.seed
        )


def init_autoencoder(seed: int) -> Autoencoder:
    """Seeded uniform init; two calls with equal seed are bit-identical."""
    rng = Rng(seed)
    enc_bound = 1.0 / math.sqrt(INPUT_DIM)
    dec_bound = 1.0 / math.sqrt(HIDDEN_DIM)
    w_enc = rng.uniform_array(HIDDEN_DIM * INPUT_DIM, -enc_bound, enc_bound).reshape(
        HIDDEN_DIM, INPUT_DIM
    )
    b_enc = rng.uniform_array(HIDDEN_DIM, -enc_bound, enc_bound)
    w_dec = rng.uniform_array(INPUT_DIM * HIDDEN_DIM, -dec_bound, dec_bound).reshape(
        INPUT_DIM, HIDDEN_DIM
    )
    b_dec = rng.uniform_array(INPUT_DIM, -dec_bound, dec_bound)
    return Autoencoder(w_enc, b_enc, w_dec, b_dec, seed & ((1 << 64) - 1))


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def sigmoid(u: np.ndarray) -> np.ndarray:
    """Numerically stable logistic function."""
    out = np.empty_like(u)
    pos = u >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-u[pos]))
    eu = np.exp(u[~pos])
    out[~pos] = eu / (1.0 + eu)
    return out


def _check_vector(x: np.ndarray, dim: int, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.shape[0] != dim:
        raise InputShapeError(f"{name} must be a length-{dim} vector, got shape {x.shape}")
    return x


def encode(ae: Autoencoder, x: np.ndarray, *, check_nonzero: bool = False) -> np.ndarray:
    """Hidden representation relu(w_enc @ x + b_enc); length 128.

    With check_nonzero, a nonzero input collapsing to the all-zero embedding
    raises ZeroEmbeddingError instead of silently returning a vector that no
    similarity metric can rank.
    """
    x = _check_vector(x, INPUT_DIM, "input")
    h = relu(ae.w_enc @ x + ae.b_enc)
    if check_nonzero and np.any(x != 0.0) and not np.any(h != 0.0):
        raise ZeroEmbeddingError("nonzero input produced an all-zero embedding")
    return h

def encode_batch(ae: Autoencoder, x: np.ndarray) -> np.ndarray:
    """Row-wise encode; x is (n, 784), result is (n, 128)."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != INPUT_DIM:
        raise InputShapeError(f"batch must be (n, {INPUT_DIM}), got {x.shape}")
    return relu(x @ ae.w_enc.T + ae.b_enc)


def decode(ae: Autoencoder, h: np.ndarray) -> np.ndarray:
    """Reconstruction sigmoid(w_dec @ h + b_dec); entries in (0, 1)."""
    h = _check_vector(h, HIDDEN_DIM, "embedding")
    return sigmoid(ae.w_dec @ h + ae.b_dec)


def decode_batch(ae: Autoencoder, h: np.ndarray) -> np.ndarray:
    h = np.asarray(h, dtype=np.float64)
    if h.ndim != 2 or h.shape[1] != HIDDEN_DIM:
        raise InputShapeError(f"batch must be (n, {HIDDEN_DIM}), got {h.shape}")
    return sigmoid(h @ ae.w_dec.T + ae.b_dec)


def reconstruct(ae: Autoencoder, x: np.ndarray) -> np.ndarray:
    return decode(ae, encode(ae, x))


def mse_loss(x: np.ndarray, x_hat: np.ndarray) -> float:
    """Mean squared difference over coordinates."""
    x = np.asarray(x, dtype=np.float64)
    x_hat = np.asarray(x_hat, dtype=np.float64)
    if x.shape != x_hat.shape:
        raise InputShapeError(f"length mismatch: {x.shape} vs {x_hat.shape}")
    d = x - x_hat
    return float(np.mean(d * d))


def forward_backward(ae: Autoencoder, x: np.ndarray) -> tuple[float, list[np.ndarray]]:
    """Reconstruction loss and its gradients, averaged over the batch.

    Returns (loss, [g_w_enc, g_b_enc, g_w_dec, g_b_dec]). relu subgradient
    at exactly 0 is taken as 0.
    """
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    if x.shape[1] != INPUT_DIM:
        raise InputShapeError(f"batch must be (n, {INPUT_DIM}), got {x.shape}")
    n = x.shape[0]

    z = x @ ae.w_enc.T + ae.b_enc
    h = relu(z)
    u = h @ ae.w_dec.T + ae.b_dec
    y = sigmoid(u)

    diff = y - x
    loss = float(np.mean(diff * diff))

    d_u = (2.0 / (n * INPUT_DIM)) * diff * y * (1.0 - y)
    g_w_dec = d_u.T @ h
    g_b_dec = d_u.sum(axis=0)
    d_h = d_u @ ae.w_dec
    d_z = d_h * (z > 0.0)
    g_w_enc = d_z.T @ x
    g_b_enc = d_z.sum(axis=0)
    return loss, [g_w_enc, g_b_enc, g_w_dec, g_b_dec]


_HEADER = struct.Struct("<4sHQ")


def save_model(ae: Autoencoder, path: str | Path) -> None:
    """Write the binary model file: magic, version, seed, then parameters
    as little-endian float64 in declaration order."""
    with open(path, "wb") as f:
        f.write(_HEADER.pack(MODEL_MAGIC, MODEL_VERSION, ae.seed))
        for p in ae.params():
            f.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_model(path: str | Path) -> Autoencoder:
    with open(path, "rb") as f:
        head = f.read(_HEADER.size)
        if len(head) < _HEADER.size:
            raise FormatError("model file too short for header")
        magic, version, seed = _HEADER.unpack(head)
        if magic != MODEL_MAGIC:
            raise FormatError(f"bad model magic {magic!r}")
        if version != MODEL_VERSION:
            raise FormatError(f"unsupported model version {version}")
        shapes = [(HIDDEN_DIM, INPUT_DIM), (HIDDEN_DIM,), (INPUT_DIM, HIDDEN_DIM), (INPUT_DIM,)]
        arrays = []
        for shape in shapes:
            count = int(np.prod(shape))
            raw = f.read(count * 8)
            if len(raw) != count * 8:
                raise FormatError("model file truncated")
            arrays.append(np.frombuffer(raw, dtype="<f8").astype(np.float64).reshape(shape))
        if f.read(1):
            raise FormatError("trailing bytes after model parameters")
    ae = Autoencoder(*arrays, seed=seed)
    for p in ae.params():
        if not np.all(np.isfinite(p)):
            raise FormatError("model file contains non-finite parameters")
    return ae
