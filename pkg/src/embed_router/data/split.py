"""Stratified server / client A / client B splitting (50/25/25).

Every class is shuffled and apportioned separately so that each party sees
every class; without that, server-side class centroids could not be built.
Rounding leftovers alternate between parties so bucket totals track the
exact 50/25/25 proportions (a 10000-sample corpus with the standard digits
class balance lands on exactly 5000/2500/2500).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from embed_router.data.datasets import LabeledDataset
from embed_router.errors import StratificationError
from embed_router.rng import Rng, derive_seed

_SPLIT_TAG = 0x5D


@dataclass(frozen=True)
class SplitAssignment:
    server_idx: np.ndarray
    client_a_idx: np.ndarray
    client_b_idx: np.ndarray

    def parts(self) -> dict[str, np.ndarray]:
        return {
            "server": self.server_idx,
            "client_a": self.client_a_idx,
            "client_b": self.client_b_idx,
        }


def split(ds: LabeledDataset, seed: int) -> SplitAssignment:
    """Disjoint index sets covering the dataset, 50/25/25, deterministic in seed."""
    labels = np.unique(ds.y)
    server, client_a, client_b = [], [], []
    rng = Rng(derive_seed(seed, _SPLIT_TAG))
    server_extra = True
    client_extra = True
    for cls in labels:
        idx = np.flatnonzero(ds.y == cls)
        if idx.shape[0] < 4:
            raise StratificationError(
                f"class {int(cls)} has {idx.shape[0]} samples; need at least 4"
            )
        idx = idx.tolist()
        rng.shuffle(idx)

        count = len(idx)
        n_server = count // 2
        if count % 2:
            n_server += 1 if server_extra else 0
            server_extra = not server_extra
        rest = count - n_server
        n_a = rest // 2
        if rest % 2:
            n_a += 1 if client_extra else 0
            client_extra = not client_extra

        server.extend(idx[:n_server])
        client_a.extend(idx[n_server : n_server + n_a])
        client_b.extend(idx[n_server + n_a :])

    return SplitAssignment(
        server_idx=np.array(sorted(server), dtype=np.int64),
        client_a_idx=np.array(sorted(client_a), dtype=np.int64),
        client_b_idx=np.array(sorted(client_b), dtype=np.int64),
    )
