"""Synthetic key sets with tunable model hardness.

Real-world key distributions vary from near-uniform (easy to fit with one
line) to heavily clustered at many scales (hard).  Each generator here is
deterministic in (kind, n, seed, params) and produces sorted distinct
uint64 keys below 2**51, which keeps double-precision model arithmetic
exact.  Payloads are key + 1 throughout the benchmark.

The adversarial kind nests clusters inside clusters (self-similar, with a
configurable branching factor and span shrink per level) plus one flat
dense run, so a fitted model keeps meeting conflicts at every zoom level -
the regime that separates bounded conflict structures from recursive
model nodes.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

KEY_SPACE = 1 << 50

KINDS = ("uniform", "lognormal", "clustered-hotspot", "adversarial-conflict")


class DatasetError(Exception):
    pass


@dataclass
class DatasetSpec:
    kind: str
    n: int
    seed: int
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise DatasetError(f"unknown dataset kind {self.kind!r}")
        if self.n < 1:
            raise DatasetError("n must be >= 1")


def payloads_for(keys: np.ndarray) -> np.ndarray:
    return keys + 1


def gen_dataset(spec: DatasetSpec) -> np.ndarray:
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "uniform":
        keys = _uniform(rng, spec.n)
    elif spec.kind == "lognormal":
        sigma = spec.params.get("sigma", 2.0)
        keys = _lognormal(rng, spec.n, sigma)
    elif spec.kind == "clustered-hotspot":
        hotspots = spec.params.get("hotspots", 20)
        step = spec.params.get("step", 2)
        keys = _hotspots(rng, spec.n, hotspots, step)
    else:
        keys = _adversarial(rng, spec.n, spec.params)
    return _distinct(rng, keys, spec.n)


def _distinct(rng, keys: np.ndarray, n: int) -> np.ndarray:
    """Dedup and top up with uniform keys until exactly n remain."""
    keys = np.unique(keys.astype(np.uint64))
    while keys.size < n:
        extra = rng.integers(1, KEY_SPACE, size=(n - keys.size) * 2, dtype=np.uint64)
        keys = np.unique(np.concatenate([keys, extra]))
    if keys.size > n:
        drop = rng.choice(keys.size, size=keys.size - n, replace=False)
        keys = np.delete(keys, drop)
    return keys


def _uniform(rng, n: int) -> np.ndarray:
    return rng.integers(1, KEY_SPACE, size=int(n * 1.05) + 8, dtype=np.uint64)


def _lognormal(rng, n: int, sigma: float) -> np.ndarray:
    vals = rng.lognormal(mean=0.0, sigma=sigma, size=int(n * 1.2) + 8)
    scaled = np.minimum(vals * 2**32, KEY_SPACE - 1)
    return np.maximum(scaled.astype(np.uint64), 1)


def _hotspots(rng, n: int, hotspots: int, step: int) -> np.ndarray:
    per = -(-n // hotspots)
    width = per * step * 4
    centers = np.sort(rng.integers(width, KEY_SPACE - width, size=hotspots, dtype=np.uint64))
    chunks = []
    for c in centers:
        offs = np.cumsum(rng.integers(1, step + 1, size=per, dtype=np.uint64))
        chunks.append(c + offs)
    return np.concatenate(chunks)


def _adversarial(rng, n: int, params: dict) -> np.ndarray:
    branching = params.get("branching", 4)
    shrink = params.get("shrink", 32)
    spread = params.get("spread", 32**5)
    fractal_frac = params.get("fractal_frac", 0.7)
    dense_run = min(params.get("dense_run", 2000), n // 4)

    n_fractal = int(n * fractal_frac)
    n_uniform = max(n - n_fractal - dense_run, 0)
    parts = []
    if n_fractal:
        span = n_fractal * spread
        base = rng.integers(KEY_SPACE // 4, KEY_SPACE // 2, dtype=np.uint64)
        parts.append(base + _fractal_offsets(rng, n_fractal, span, branching, shrink))
    if dense_run:
        base = rng.integers(KEY_SPACE // 2, (KEY_SPACE * 3) // 4, dtype=np.uint64)
        parts.append(base + np.arange(dense_run, dtype=np.uint64))
    if n_uniform:
        parts.append(rng.integers(1, KEY_SPACE, size=n_uniform, dtype=np.uint64))
    return np.concatenate(parts)


def _fractal_offsets(rng, n: int, span: int, branching: int, shrink: int) -> np.ndarray:
    """Self-similar offsets: clusters occupy a 1/shrink sliver of their slice."""
    if n <= branching * 4 or span <= n * 4:
        return np.arange(n, dtype=np.uint64)
    slice_w = span // branching
    child_span = max(slice_w // shrink, 1)
    base, extra = divmod(n, branching)
    out = []
    for i in range(branching):
        cnt = base + (1 if i < extra else 0)
        jitter = int(rng.integers(0, max(slice_w - child_span, 1)))
        start = i * slice_w + jitter
        out.append(start + _fractal_offsets(rng, cnt, child_span, branching, shrink))
    return np.concatenate(out).astype(np.uint64)


def write_dataset(path: str, keys: np.ndarray) -> None:
    np.asarray(keys, dtype="<u8").tofile(path)


def read_dataset(path: str) -> np.ndarray:
    keys = np.fromfile(path, dtype="<u8")
    if keys.size == 0:
        raise DatasetError(f"empty dataset file {path}")
    return keys
