"""Embeddable on-disk learned index with a B+-tree baseline and benchmark CLI."""

from __future__ import annotations

import os

import numpy as np

from .blockstore import (
    BlockStore, BlockStoreError, IoStats, DEFAULT_BLOCK_SIZE,
    INDEX_KIND_AULID, INDEX_KIND_BTREE, probe,
)
from .model import LinearModel, ModelError, build_model, conflict_degree, predict
from .aulid import AulidIndex, AulidError, Config, PhaseTimer
from .btree import BPlusTreeIndex, BTreeError
from .datasets import DatasetSpec, gen_dataset, payloads_for, read_dataset, write_dataset
from .workloads import (
    Metrics, Oracle, WorkloadSpec, ablation_extra_blocks, run_workload, split_init,
)

__version__ = "0.1.0"

__all__ = [
    "AulidIndex", "AulidError", "BPlusTreeIndex", "BTreeError", "BlockStore",
    "BlockStoreError", "Config", "DatasetSpec", "IoStats", "LinearModel",
    "Metrics", "ModelError", "Oracle", "PhaseTimer", "WorkloadSpec",
    "ablation_extra_blocks", "build_aulid", "build_btree", "build_model",
    "conflict_degree", "default_block_size", "gen_dataset", "open_index",
    "payloads_for", "predict", "read_dataset", "run_workload", "split_init",
    "write_dataset",
]


def default_block_size() -> int:
    """Block size from AULID_BLOCK_SIZE, else 4096."""
    return int(os.environ.get("AULID_BLOCK_SIZE", DEFAULT_BLOCK_SIZE))


def build_aulid(path: str, keys, payloads=None, config: Config | None = None,
                block_size: int | None = None) -> AulidIndex:
    """Create an index file at ``path`` and bulkload it."""
    keys = np.asarray(keys, dtype=np.uint64)
    if payloads is None:
        payloads = payloads_for(keys)
    store = BlockStore.open(path, block_size or default_block_size(), create=True)
    return AulidIndex.bulkload(store, keys, payloads, config)


def build_btree(path: str, keys, payloads=None, leaf_fill: float = 1.0,
                block_size: int | None = None) -> BPlusTreeIndex:
    keys = np.asarray(keys, dtype=np.uint64)
    if payloads is None:
        payloads = payloads_for(keys)
    store = BlockStore.open(path, block_size or default_block_size(), create=True)
    return BPlusTreeIndex.bulkload(store, keys, payloads, leaf_fill)


def open_index(path: str):
    """Open an existing index file as whichever index kind built it."""
    block_size, kind = probe(path)
    store = BlockStore.open(path, block_size, create=False)
    if kind == INDEX_KIND_AULID:
        return AulidIndex.open(store)
    if kind == INDEX_KIND_BTREE:
        return BPlusTreeIndex.open(store)
    store.close()
    raise BlockStoreError(f"{path} holds no index (kind byte {kind})")
