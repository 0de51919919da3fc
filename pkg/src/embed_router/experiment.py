"""Evaluation harness: train server and client autoencoders over a set of
datasets, build the centroid registry, and score coarse, fine, and
MSE-baseline assignment per client.

Seed discipline: every stream (dataset synthesis, splitting, shuffling,
initialization) is derived from the experiment seed plus a fixed tag, so a
config reproduces bit-identically while no two streams collide. With
shared_seed on, all autoencoders initialize from the experiment seed
itself, mirroring a server that hands its seed to the clients; off, each
client draws a private derived seed.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from embed_router.data.datasets import (
    DatasetSpec,
    LabeledDataset,
    default_data_dir,
    load_dataset,
)
from embed_router.data.split import SplitAssignment, split
from embed_router.errors import ConfigError
from embed_router.matcher import (
    CentroidEntry,
    CentroidIndex,
    assign_hierarchical,
    build_centroids,
    coarse_assign,
    evaluate_accuracy,
    mse_baseline_assign_batch,
)
from embed_router.nn.autoencoder import Autoencoder, encode_batch, init_autoencoder
from embed_router.nn.train import TrainConfig, train
from embed_router.rng import Rng, derive_seed

SERVER = "server"
CLIENTS = ("A", "B")

# stream tags; values are arbitrary but frozen (changing one changes results)
_DATA_TAG = 0xDA
_SPLIT_TAG = 0x51
_INIT_TAG = 0x1C
_SHUFFLE_TAG = 0x5F

METRIC_CA = "CA"
METRIC_FA = "FA"
METHOD_COSINE = "cosine"
METHOD_MSE = "mse_baseline"


def desk_scale_specs() -> list[DatasetSpec]:
    """Default evaluation trio: the 28x28 digits corpus plus two
    well-separated synthetic datasets, one of them off-dimension to
    exercise the pooling path."""
    return [
        DatasetSpec(name="mnist", source="idx_files", num_classes=10, dims=784),
        DatasetSpec(
            name="blobs_a",
            source="synthetic",
            num_classes=5,
            dims=784,
            params={"sigma": 0.1, "samples_per_class": 160},
        ),
        DatasetSpec(
            name="blobs_b",
            source="synthetic",
            num_classes=4,
            dims=1024,
            params={"sigma": 0.1, "samples_per_class": 150},
        ),
    ]


@dataclass
class ExperimentConfig:
    datasets: list[DatasetSpec]
    seed: int = 0
    shared_seed: bool = True
    train: TrainConfig = field(default_factory=TrainConfig)
    output_dir: Path | None = None
    data_dir: Path | None = None

    def validate(self) -> None:
        if not self.datasets:
            raise ConfigError("at least one dataset is required")
        names = [s.name for s in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError("dataset names must be unique")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must fit in 64 bits")
        for spec in self.datasets:
            spec.validate()
        self.train.validate()


@dataclass(frozen=True)
class ResultRow:
    client: str
    dataset: str
    metric: str  # CA or FA
    method: str  # cosine or mse_baseline
    accuracy: float  # percent


@dataclass
class ResultTable:
    rows: list[ResultRow] = field(default_factory=list)

    def __post_init__(self):
        for row in self.rows:
            if not 0.0 <= row.accuracy <= 100.0:
                raise ConfigError(f"accuracy {row.accuracy} outside [0, 100]")

    def lookup(self, client: str, dataset: str, metric: str, method: str) -> float:
        for row in self.rows:
            if (row.client, row.dataset, row.metric, row.method) == (
                client,
                dataset,
                metric,
                method,
            ):
                return row.accuracy
        raise KeyError((client, dataset, metric, method))


@dataclass
class EvaluationOutcome:
    """Everything a caller might want after one evaluation run."""

    config: ExperimentConfig
    table: ResultTable
    index: CentroidIndex
    datasets: list[LabeledDataset]
    splits: list[SplitAssignment]
    server_models: dict[str, Autoencoder]  # dataset name -> trained AE
    client_models: dict[tuple[str, str], Autoencoder]  # (client, dataset name)
    histories: dict[tuple[str, str], list[float]]  # (role, dataset name)


def _init_seed(cfg: ExperimentConfig, role: str, dataset_pos: int) -> int:
    if role == SERVER or cfg.shared_seed:
        return cfg.seed
    role_code = CLIENTS.index(role) + 1
    return derive_seed(cfg.seed, _INIT_TAG, role_code, dataset_pos)


def _shuffle_rng(cfg: ExperimentConfig, role: str, dataset_pos: int) -> Rng:
    role_code = 0 if role == SERVER else CLIENTS.index(role) + 1
    return Rng(derive_seed(cfg.seed, _SHUFFLE_TAG, role_code, dataset_pos))


def _train_role(
    cfg: ExperimentConfig, role: str, dataset_pos: int, data: np.ndarray
) -> tuple[Autoencoder, list[float]]:
    ae = init_autoencoder(_init_seed(cfg, role, dataset_pos))
    return train(ae, data, cfg.train, _shuffle_rng(cfg, role, dataset_pos))


def run_evaluation(cfg: ExperimentConfig) -> EvaluationOutcome:
    """Train all autoencoders, build the registry, and score each client.

    Expert ids are dataset positions in config order. CA truth is the
    source dataset; FA truth is the class label, scored on the class id
    the hierarchical assignment produces (a coarse miss usually costs the
    fine answer too). The MSE baseline routes the raw sample to the server
    autoencoder reconstructing it best, for the paired comparison.
    """
    cfg.validate()
    data_dir = cfg.data_dir if cfg.data_dir is not None else default_data_dir()

    datasets: list[LabeledDataset] = []
    splits: list[SplitAssignment] = []
    entries: list[CentroidEntry] = []
    server_models: dict[str, Autoencoder] = {}
    client_models: dict[tuple[str, str], Autoencoder] = {}
    histories: dict[tuple[str, str], list[float]] = {}

    for k, spec in enumerate(cfg.datasets):
        ds = load_dataset(spec, data_dir, derive_seed(cfg.seed, _DATA_TAG, k))
        parts = split(ds, derive_seed(cfg.seed, _SPLIT_TAG, k))
        datasets.append(ds)
        splits.append(parts)

        server_ds = ds.subset(parts.server_idx)
        ae, history = _train_role(cfg, SERVER, k, server_ds.x)
        server_models[spec.name] = ae
        histories[(SERVER, spec.name)] = history
        entries.append(build_centroids(ae, server_ds, expert_id=k))

        for client, idx in zip(CLIENTS, (parts.client_a_idx, parts.client_b_idx)):
            client_ae, client_history = _train_role(cfg, client, k, ds.x[idx])
            client_models[(client, spec.name)] = client_ae
            histories[(client, spec.name)] = client_history

    index = CentroidIndex(entries=entries)
    server_aes = [server_models[spec.name] for spec in cfg.datasets]

    rows: list[ResultRow] = []
    for client in CLIENTS:
        for k, spec in enumerate(cfg.datasets):
            parts = splits[k]
            idx = parts.client_a_idx if client == "A" else parts.client_b_idx
            queries = datasets[k].x[idx]
            labels = datasets[k].y[idx]
            embeddings = encode_batch(client_models[(client, spec.name)], queries)

            coarse_pred = [coarse_assign(e, index).expert_id for e in embeddings]
            fine_pred = [assign_hierarchical(e, index).class_id for e in embeddings]
            mse_pred = mse_baseline_assign_batch(queries, server_aes)

            rows.append(
                ResultRow(
                    client=client,
                    dataset=spec.name,
                    metric=METRIC_CA,
                    method=METHOD_COSINE,
                    accuracy=evaluate_accuracy(coarse_pred, [k] * len(queries)),
                )
            )
            rows.append(
                ResultRow(
                    client=client,
                    dataset=spec.name,
                    metric=METRIC_FA,
                    method=METHOD_COSINE,
                    accuracy=evaluate_accuracy(fine_pred, labels.tolist()),
                )
            )
            rows.append(
                ResultRow(
                    client=client,
                    dataset=spec.name,
                    metric=METRIC_CA,
                    method=METHOD_MSE,
                    accuracy=evaluate_accuracy(mse_pred.tolist(), [k] * len(queries)),
                )
            )

    return EvaluationOutcome(
        config=cfg,
        table=ResultTable(rows=rows),
        index=index,
        datasets=datasets,
        splits=splits,
        server_models=server_models,
        client_models=client_models,
        histories=histories,
    )


def prepare_dataset(
    spec: DatasetSpec, seed: int, data_dir: Path, position: int = 0
) -> tuple[LabeledDataset, SplitAssignment]:
    """Load and split one dataset exactly as run_evaluation would when the
    dataset sits at the given config position, so standalone commands and
    full evaluations agree on every index."""
    ds = load_dataset(spec, data_dir, derive_seed(seed, _DATA_TAG, position))
    return ds, split(ds, derive_seed(seed, _SPLIT_TAG, position))


def train_server(
    spec: DatasetSpec,
    seed: int,
    train_cfg: TrainConfig,
    data_dir: Path,
    position: int = 0,
) -> tuple[Autoencoder, list[float], LabeledDataset, SplitAssignment]:
    """Train the server-side autoencoder for one dataset on its server split."""
    ds, parts = prepare_dataset(spec, seed, data_dir, position)
    cfg = ExperimentConfig(datasets=[spec], seed=seed, train=train_cfg, data_dir=data_dir)
    ae, history = _train_role(cfg, SERVER, position, ds.x[parts.server_idx])
    return ae, history, ds, parts


def run_seed_ablation(cfg: ExperimentConfig) -> list[tuple[bool, EvaluationOutcome]]:
    """The same evaluation with and without seed sharing, in that order.

    Measures the effect of shared initialization; draws no conclusion."""
    legs = []
    for shared in (True, False):
        legs.append((shared, run_evaluation(replace(cfg, shared_seed=shared))))
    return legs
