"""Numeric kernels for model fitting and slot prediction.

These loops run over every key during bulkload and every subtree rebuild, so
they are the numeric hot spots of the package.  Each kernel has a pure-numpy
implementation and, when numba is importable, an ``@njit`` twin compiled from
the same scalar loop.  Set ``AULID_NO_NUMBA=1`` to force the numpy path (the
benchmark in ``benchmarks/bench_kernels.py`` compares the two).
"""

from __future__ import annotations

import os

import numpy as np

_DISABLED = os.environ.get("AULID_NO_NUMBA", "").lower() in ("1", "true", "yes")


def predict_slots_numpy(keys: np.ndarray, slope: float, intercept: float, num_slots: int) -> np.ndarray:
    """Clamped slot predictions floor(slope*key + intercept) for a key batch."""
    raw = np.floor(slope * keys + intercept)
    return np.clip(raw, 0, num_slots - 1).astype(np.int64)


def max_run_length_numpy(values: np.ndarray) -> int:
    """Longest run of equal adjacent values in a sorted int array."""
    n = values.shape[0]
    if n == 0:
        return 0
    boundaries = np.flatnonzero(np.diff(values))
    edges = np.concatenate(([-1], boundaries, [n - 1]))
    return int(np.max(np.diff(edges)))


def min_gap_numpy(keys: np.ndarray, d: int) -> float:
    """Smallest keys[i+d] - keys[i] over a sorted float array."""
    if d >= keys.shape[0]:
        return float("inf")
    return float(np.min(keys[d:] - keys[:-d]))


def _predict_slots_scalar(keys, slope, intercept, num_slots):
    out = np.empty(keys.shape[0], dtype=np.int64)
    hi = num_slots - 1
    for i in range(keys.shape[0]):
        s = int(np.floor(slope * keys[i] + intercept))
        if s < 0:
            s = 0
        elif s > hi:
            s = hi
        out[i] = s
    return out


def _max_run_length_scalar(values):
    n = values.shape[0]
    if n == 0:
        return 0
    best = 1
    run = 1
    for i in range(1, n):
        if values[i] == values[i - 1]:
            run += 1
            if run > best:
                best = run
        else:
            run = 1
    return best


def _min_gap_scalar(keys, d):
    n = keys.shape[0]
    if d >= n:
        return np.inf
    best = keys[d] - keys[0]
    for i in range(1, n - d):
        g = keys[i + d] - keys[i]
        if g < best:
            best = g
    return best


USING_NUMBA = False
if not _DISABLED:
    try:
        from numba import njit

        predict_slots_njit = njit(cache=True)(_predict_slots_scalar)
        max_run_length_njit = njit(cache=True)(_max_run_length_scalar)
        min_gap_njit = njit(cache=True)(_min_gap_scalar)
        USING_NUMBA = True
    except ImportError:
        pass

if USING_NUMBA:
    predict_slots = predict_slots_njit
    min_gap = min_gap_njit

    def max_run_length(values: np.ndarray) -> int:
        return int(max_run_length_njit(values))
else:
    predict_slots = predict_slots_numpy
    max_run_length = max_run_length_numpy
    min_gap = min_gap_numpy
