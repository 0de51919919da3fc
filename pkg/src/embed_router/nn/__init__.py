"""Dense autoencoder, Adam optimizer, deterministic training loop."""

from embed_router.nn.autoencoder import (
    HIDDEN_DIM,
    INPUT_DIM,
    Autoencoder,
    decode,
    decode_batch,
    encode,
    encode_batch,
    init_autoencoder,
    load_model,
    mse_loss,
    reconstruct,
    save_model,
)
from embed_router.nn.gradcheck import gradient_check
from embed_router.nn.train import AdamState, TrainConfig, adam_step, learning_rate, train

__all__ = [
    "INPUT_DIM",
    "HIDDEN_DIM",
    "Autoencoder",
    "init_autoencoder",
    "encode",
    "encode_batch",
    "decode",
    "decode_batch",
    "reconstruct",
    "mse_loss",
    "save_model",
    "load_model",
    "TrainConfig",
    "AdamState",
    "adam_step",
    "learning_rate",
    "train",
    "gradient_check",
]
