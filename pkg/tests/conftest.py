"""Shared fixtures and the acceptance summary hook.

The dataset cache lives inside the tests tree so the generated digits
corpus is built once and reused across test sessions and subprocesses.
"""

import os
from pathlib import Path

import numpy as np
import pytest

TESTS_DIR = Path(__file__).resolve().parent
DATA_DIR = Path(os.environ.setdefault("EMBED_ROUTER_DATA_DIR", str(TESTS_DIR / "_data")))
DATA_DIR.mkdir(parents=True, exist_ok=True)

# filled by the acceptance tests, echoed after the run so the one-line
# verdicts are visible even with output capture on
ACCEPTANCE_LINES: list[str] = []


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"[criterion {number}] {'PASS' if ok else 'FAIL'}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.ensure_newline()
    terminalreporter.section("acceptance criteria", sep="=")
    for line in ACCEPTANCE_LINES:
        terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def data_dir() -> Path:
    return DATA_DIR


@pytest.fixture(scope="session")
def small_blobs():
    """Three well-separated synthetic classes, 60 samples each."""
    from embed_router.data.datasets import DatasetSpec
    from embed_router.data.synth import synth_dataset

    spec = DatasetSpec(
        name="blobs3",
        source="synthetic",
        num_classes=3,
        dims=784,
        params={"sigma": 0.08, "samples_per_class": 60},
    )
    return synth_dataset(spec, seed=11)


@pytest.fixture(scope="session")
def trained_small_ae(small_blobs):
    """One autoencoder briefly trained on the small synthetic set."""
    from embed_router.nn.autoencoder import init_autoencoder
    from embed_router.nn.train import TrainConfig, train
    from embed_router.rng import Rng

    cfg = TrainConfig(epochs=8, batch_size=32)
    ae, history = train(init_autoencoder(5), small_blobs.x, cfg, Rng(55))
    return ae


@pytest.fixture()
def rng_values():
    return np.random.default_rng(1234)
