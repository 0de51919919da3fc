"""Dataset descriptions, validation, and the loading entry point.

A DatasetSpec names a corpus and how to materialize it: either a pair of
IDX files on disk or a seeded synthetic generator. Spec files are plain
key=value lines; inline comma-separated key=value strings are accepted on
the CLI for convenience.
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from embed_router.errors import ConfigError, ParamError

DATA_DIR_ENV = "EMBED_ROUTER_DATA_DIR"

#: IDX file names probed for the standard digits corpus, in priority order.
MNIST_FILE_CANDIDATES = [
    ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
    ("t10k-images-idx3-ubyte.gz", "t10k-labels-idx1-ubyte.gz"),
    ("t10k-images.idx3-ubyte", "t10k-labels.idx1-ubyte"),
]


@dataclass(frozen=True)
class DatasetSpec:
    name: str
    source: str  # "idx_files" | "synthetic"
    num_classes: int
    dims: int = 784
    params: dict = field(default_factory=dict)

    def validate(self) -> None:
        if self.source not in ("idx_files", "synthetic"):
            raise ConfigError(f"unknown dataset source {self.source!r}")
        if self.num_classes < 2:
            raise ConfigError("datasets need at least 2 classes")
        if self.dims < 1:
            raise ConfigError("dims must be >= 1")


@dataclass
class LabeledDataset:
    x: np.ndarray  # (n, 784) float64 in [0, 1]
    y: np.ndarray  # (n,) int64 labels in [0, num_classes)
    spec: DatasetSpec

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=np.float64)
        self.y = np.asarray(self.y, dtype=np.int64)
        if self.x.ndim != 2 or self.x.shape[0] != self.y.shape[0]:
            raise ParamError(
                f"feature/label mismatch: {self.x.shape} vs {self.y.shape}"
            )
        if self.x.size and (self.x.min() < 0.0 or self.x.max() > 1.0):
            raise ParamError("features must lie in [0, 1]")
        if self.y.size and (self.y.min() < 0 or self.y.max() >= self.spec.num_classes):
            raise ParamError("labels out of range for declared class count")

    def __len__(self) -> int:
        return self.x.shape[0]

    def subset(self, indices: np.ndarray) -> "LabeledDataset":
        return LabeledDataset(x=self.x[indices], y=self.y[indices], spec=self.spec)


def default_data_dir() -> Path:
    return Path(os.environ.get(DATA_DIR_ENV, "data"))


_SPEC_KEYS = {"name", "source", "classes", "sigma", "samples_per_class", "dims", "images", "labels"}


def parse_dataset_spec(text_or_path: str | Path) -> DatasetSpec:
    """Parse a dataset spec from a key=value file or an inline string.

    File form: one key=value per line, '#' comments allowed. Inline form:
    comma-separated key=value pairs, e.g.
    "name=blobs,classes=4,sigma=0.1,samples_per_class=300".
    The bare word "mnist" names the standard digits corpus.
    """
    text = str(text_or_path)
    if text == "mnist":
        return mnist_spec()
    path = Path(text)
    if path.is_file():
        pairs = [
            line.split("#", 1)[0].strip()
            for line in path.read_text().splitlines()
        ]
        pairs = [p for p in pairs if p]
    else:
        if "=" not in text:
            raise ConfigError(
                f"dataset spec {text!r} is neither 'mnist', an existing file, nor inline key=value pairs"
            )
        pairs = [p.strip() for p in text.split(",") if p.strip()]

    kv: dict[str, str] = {}
    for pair in pairs:
        if "=" not in pair:
            raise ConfigError(f"bad spec line {pair!r}, expected key=value")
        key, value = pair.split("=", 1)
        key, value = key.strip(), value.strip()
        if key not in _SPEC_KEYS:
            raise ConfigError(f"unknown dataset spec key {key!r}")
        kv[key] = value

    source = kv.get("source", "synthetic")
    try:
        if source == "synthetic":
            spec = DatasetSpec(
                name=kv.get("name", "synthetic"),
                source="synthetic",
                num_classes=int(kv.get("classes", "2")),
                dims=int(kv.get("dims", "784")),
                params={
                    "sigma": float(kv.get("sigma", "0.1")),
                    "samples_per_class": int(kv.get("samples_per_class", "200")),
                },
            )
        elif source == "idx_files":
            spec = DatasetSpec(
                name=kv.get("name", "idx"),
                source="idx_files",
                num_classes=int(kv.get("classes", "10")),
                dims=int(kv.get("dims", "784")),
                params={"images": kv["images"], "labels": kv["labels"]},
            )
        else:
            raise ConfigError(f"unknown dataset source {source!r}")
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad dataset spec: {exc}") from exc
    spec.validate()
    return spec


def mnist_spec() -> DatasetSpec:
    return DatasetSpec(name="mnist", source="idx_files", num_classes=10, dims=784, params={})


def load_dataset(spec: DatasetSpec, data_dir: str | Path | None = None, seed: int = 0) -> LabeledDataset:
    """Materialize a dataset.

    Synthetic specs are generated from (spec, seed). IDX specs are read from
    disk; the "mnist" slot resolves its files inside data_dir, generating
    the bundled deterministic digits corpus there on first use if no real
    IDX files are present.
    """
    from embed_router.data.idx import load_idx
    from embed_router.data.synth import synth_dataset

    spec.validate()
    if spec.source == "synthetic":
        return synth_dataset(spec, seed)

    data_dir = Path(data_dir) if data_dir is not None else default_data_dir()
    if spec.params.get("images"):
        ds = load_idx(spec.params["images"], spec.params["labels"])
    else:
        ds = _load_standard_digits(data_dir)
    return LabeledDataset(x=ds.x, y=ds.y, spec=spec)


def _load_standard_digits(data_dir: Path) -> LabeledDataset:
    from embed_router.data.digits import ensure_digits_corpus
    from embed_router.data.idx import load_idx

    for images_name, labels_name in MNIST_FILE_CANDIDATES:
        images = data_dir / images_name
        labels = data_dir / labels_name
        if images.is_file() and labels.is_file():
            return load_idx(images, labels)
    images, labels = ensure_digits_corpus(data_dir)
    return load_idx(images, labels)
