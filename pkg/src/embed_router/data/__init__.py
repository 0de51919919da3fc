"""Dataset ingestion, preprocessing to 784-dim vectors, and splitting."""

from embed_router.data.datasets import (
    DatasetSpec,
    LabeledDataset,
    default_data_dir,
    load_dataset,
    parse_dataset_spec,
)
from embed_router.data.idx import load_idx, write_idx_images, write_idx_labels
from embed_router.data.preprocess import adaptive_avg_pool_1d, resize_to_28
from embed_router.data.split import SplitAssignment, split
from embed_router.data.synth import synth_dataset

__all__ = [
    "DatasetSpec",
    "LabeledDataset",
    "parse_dataset_spec",
    "load_dataset",
    "default_data_dir",
    "load_idx",
    "write_idx_images",
    "write_idx_labels",
    "adaptive_avg_pool_1d",
    "resize_to_28",
    "SplitAssignment",
    "split",
    "synth_dataset",
]
