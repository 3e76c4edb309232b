"""Workload generation, the in-memory oracle, metric collection, ablations.

Six workload shapes cover the usual read/write mixes: lookup-only, scan-only
(each scan reads a sampled key plus the following 99), write-only, and three
mixed ratios (90/10, 50/50, 10/90 reads to writes).  Mixed workloads build
the initial index over a seeded random fraction of the dataset and feed the
remainder in as the insert stream; search keys are always sampled from keys
currently present.

Block counts are the assertable output: throughput and latency are reported
but hardware-dependent.  Every run reconciles its per-operation read deltas
against the store's total counters, and a digest of the op stream makes
determinism checkable.
"""

from __future__ import annotations

import hashlib
import time
from bisect import bisect_left, bisect_right
from dataclasses import dataclass, field

import numpy as np

from .aulid import AulidIndex, PhaseTimer
from .inner import collect_subtree

WORKLOAD_KINDS = ("w1", "w2", "w3", "w4", "w5", "w6")
READ_RATIOS = {"w1": 1.0, "w2": 1.0, "w3": 0.0, "w4": 0.9, "w5": 0.5, "w6": 0.1}
OPT_VARIANTS = {
    "none": (False, False),
    "scanfward": (True, False),
    "fulfill": (False, True),
    "both": (True, True),
}


class WorkloadError(Exception):
    pass


@dataclass
class WorkloadSpec:
    kind: str
    op_count: int
    seed: int = 0
    scan_len: int = 100
    init_fraction: float | None = None  # per-kind default: 1.0 reads, 0.5 mixed

    def __post_init__(self):
        if self.kind not in WORKLOAD_KINDS:
            raise WorkloadError(f"unknown workload kind {self.kind!r}")
        if self.init_fraction is None:
            self.init_fraction = 1.0 if self.kind in ("w1", "w2") else 0.5

    @property
    def read_ratio(self) -> float:
        return READ_RATIOS[self.kind]


def split_init(keys: np.ndarray, fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Seeded split into a sorted initial load and a shuffled insert stream."""
    keys = np.asarray(keys, dtype=np.uint64)
    if fraction >= 1.0:
        return keys, np.empty(0, dtype=np.uint64)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(keys.size)
    k = max(1, int(keys.size * fraction))
    return np.sort(keys[perm[:k]]), keys[perm[k:]]


class Oracle:
    """Sorted in-memory multiset of (key, payload); ground truth for checks."""

    def __init__(self, keys=None, vals=None):
        self.keys: list[int] = list(keys) if keys is not None else []
        self.vals: list[int] = list(vals) if vals is not None else []

    @classmethod
    def from_pairs(cls, keys, vals) -> "Oracle":
        return cls([int(k) for k in keys], [int(v) for v in vals])

    def get(self, key: int):
        i = bisect_left(self.keys, key)
        if i < len(self.keys) and self.keys[i] == key:
            return self.vals[i]
        return None

    def range(self, lo: int, hi: int) -> list[tuple[int, int]]:
        i = bisect_left(self.keys, lo)
        j = bisect_right(self.keys, hi)
        return list(zip(self.keys[i:j], self.vals[i:j]))

    def range_count(self, lo: int, n: int) -> list[tuple[int, int]]:
        i = bisect_left(self.keys, lo)
        return list(zip(self.keys[i:i + n], self.vals[i:i + n]))

    def insert(self, key: int, val: int) -> None:
        i = bisect_right(self.keys, key)
        self.keys.insert(i, key)
        self.vals.insert(i, val)

    def delete_first(self, key: int) -> bool:
        i = bisect_left(self.keys, key)
        if i < len(self.keys) and self.keys[i] == key:
            del self.keys[i]
            del self.vals[i]
            return True
        return False

    def update(self, key: int, val: int) -> bool:
        i = bisect_left(self.keys, key)
        if i < len(self.keys) and self.keys[i] == key:
            self.vals[i] = val
            return True
        return False

    def items(self) -> list[tuple[int, int]]:
        return list(zip(self.keys, self.vals))

    def __len__(self) -> int:
        return len(self.keys)


@dataclass
class Metrics:
    kind: str
    ops: int
    read_ops: int
    write_ops: int
    duration_s: float
    throughput: float
    reads_total: int
    writes_total: int
    blocks_read_per_op: float
    blocks_written_per_op: float
    latency_p50_us: float
    latency_p99_us: float
    latency_std_us: float
    phase_ns: dict = field(default_factory=dict)
    smo: dict = field(default_factory=dict)
    opt: dict = field(default_factory=dict)
    file_size: int = 0
    verified: bool = False
    reconciled: bool = True
    op_digest: str = ""

    def to_json(self) -> dict:
        return dict(self.__dict__)


def run_workload(index, init_keys: np.ndarray, stream_keys: np.ndarray,
                 spec: WorkloadSpec, *, verify: bool = False,
                 oracle: Oracle | None = None, profile: bool = False) -> Metrics:
    """Execute one workload over a prebuilt index and collect metrics.

    ``index`` must hold exactly ``init_keys`` (payload key + 1).  In verify
    mode every read is checked against the oracle and the final index
    contents must match it exactly.
    """
    store = index.store
    rng = np.random.default_rng(spec.seed)
    existing = [int(k) for k in init_keys]
    stream = [int(k) for k in stream_keys]
    if verify and oracle is None:
        oracle = Oracle.from_pairs(existing, [k + 1 for k in existing])
    is_scan = spec.kind == "w2"
    profiler = PhaseTimer() if profile and hasattr(index, "profiler") else None
    if profiler is not None:
        index.profiler = profiler

    # exact op mix: round(ratio * N) reads, writes capped by the insert stream
    n_reads = int(round(spec.read_ratio * spec.op_count))
    n_writes = spec.op_count - n_reads
    if n_writes > len(stream):
        n_reads += n_writes - len(stream)
        n_writes = len(stream)
    read_mask = np.zeros(spec.op_count, dtype=bool)
    read_mask[:n_reads] = True
    rng.shuffle(read_mask)
    picks = rng.integers(0, 2**63, size=spec.op_count)
    latencies = np.empty(spec.op_count, dtype=np.int64)
    per_op_reads = np.empty(spec.op_count, dtype=np.int64)
    per_op_writes = np.empty(spec.op_count, dtype=np.int64)
    digest = hashlib.sha256()
    reads0, writes0 = store.stats.reads, store.stats.writes
    read_ops = write_ops = 0
    stream_at = 0
    t_start = time.perf_counter()
    for i in range(spec.op_count):
        do_read = bool(read_mask[i])
        r0, w0 = store.stats.reads, store.stats.writes
        t0 = time.perf_counter_ns()
        if do_read:
            key = existing[int(picks[i]) % len(existing)]
            if is_scan:
                got = index.scan_count(key, spec.scan_len)
                digest.update(b"s%d" % key)
                if verify:
                    want = oracle.range_count(key, spec.scan_len)
                    if got != want:
                        raise WorkloadError(f"scan mismatch at key {key}")
            else:
                got = index.lookup(key)
                digest.update(b"l%d" % key)
                if verify and got != oracle.get(key):
                    raise WorkloadError(f"lookup mismatch at key {key}: {got}")
            read_ops += 1
        else:
            key = stream[stream_at]
            stream_at += 1
            index.insert(key, key + 1)
            existing.append(key)
            digest.update(b"i%d" % key)
            if verify:
                oracle.insert(key, key + 1)
            write_ops += 1
        latencies[i] = time.perf_counter_ns() - t0
        per_op_reads[i] = store.stats.reads - r0
        per_op_writes[i] = store.stats.writes - w0
    duration = time.perf_counter() - t_start

    reads_total = store.stats.reads - reads0
    writes_total = store.stats.writes - writes0
    reconciled = (int(per_op_reads.sum()) == reads_total
                  and int(per_op_writes.sum()) == writes_total)
    verified = False
    if verify:
        hi = (1 << 64) - 1
        if index.scan(0, hi) != oracle.items():
            raise WorkloadError("final contents diverge from the oracle")
        verified = True
    if profiler is not None:
        index.profiler = None
    ops = spec.op_count
    return Metrics(
        kind=spec.kind,
        ops=ops,
        read_ops=read_ops,
        write_ops=write_ops,
        duration_s=duration,
        throughput=ops / duration if duration > 0 else 0.0,
        reads_total=reads_total,
        writes_total=writes_total,
        blocks_read_per_op=reads_total / ops,
        blocks_written_per_op=writes_total / ops,
        latency_p50_us=float(np.percentile(latencies, 50)) / 1e3,
        latency_p99_us=float(np.percentile(latencies, 99)) / 1e3,
        latency_std_us=float(np.std(latencies)) / 1e3,
        phase_ns=dict(profiler.ns) if profiler is not None else {},
        smo=index.smo.as_dict() if hasattr(index, "smo") else {},
        opt=index.opt.__dict__.copy() if hasattr(index, "opt") else {},
        file_size=store.file_size,
        verified=verified,
        reconciled=reconciled,
        op_digest=digest.hexdigest(),
    )


def ideal_lookup_costs(index: AulidIndex) -> tuple[np.ndarray, np.ndarray]:
    """Per-entry best-case block cost: one block per model level, plus the
    structure's own reads, plus one leaf."""
    if not index.root:
        return np.empty(0, dtype=np.uint64), np.empty(0, dtype=np.int64)
    report = collect_subtree(index.store, index.root, index.root_model.num_slots)
    keys = np.array([k for k, _ in report.items], dtype=np.uint64)
    costs = np.array(report.item_costs, dtype=np.int64) + 1
    return keys, costs


def ablation_extra_blocks(index: AulidIndex, sample_keys: np.ndarray,
                          n_queries: int, seed: int) -> dict:
    """Lookup-only pass counting block fetches beyond each query's ideal path."""
    store = index.store
    entry_keys, entry_costs = ideal_lookup_costs(index)
    store.reset_counters()
    index.opt.reset()
    rng = np.random.default_rng(seed)
    queries = rng.choice(sample_keys, size=n_queries, replace=True)
    ideals = np.ones(n_queries, dtype=np.int64)
    outside = ~((index.last_min <= queries) & (queries <= index.last_max))
    if entry_keys.size:
        pos = np.searchsorted(entry_keys, queries[outside])
        hit = pos < entry_keys.size
        costs = np.ones(int(outside.sum()), dtype=np.int64)
        costs[hit] = entry_costs[pos[hit]]
        ideals[outside] = costs
    extra = 0
    actual_total = 0
    for q, ideal in zip(queries, ideals):
        r0 = store.stats.reads
        index.lookup(int(q))
        actual = store.stats.reads - r0
        actual_total += actual
        if actual > ideal:
            extra += actual - ideal
    return {
        "queries": n_queries,
        "extra_blocks": extra,
        "mean_blocks": actual_total / n_queries,
        "null_scans": index.opt.null_scans,
        "null_scan_cross_block": index.opt.null_scan_cross_block,
        "scanfward_rescues": index.opt.scanfward_rescues,
        "predecessor_fallbacks": index.opt.predecessor_fallbacks,
    }
