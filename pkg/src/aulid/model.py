"""Monotonic linear models mapping keys to slot indexes.

A node with N slots routes a key through ``floor(slope * key + intercept)``,
clamped to [0, N-1].  Models are fitted with a min-gap sweep: the smallest
window width D is found such that slope = 1/min_gap(D) still fits the slot
range, which provably caps the number of keys sharing a slot at D.  Key
arithmetic is double precision; keys above 2**53 can collide in the model,
which is acceptable because predictions are routing hints only and every
slot structure verifies keys exactly.
"""

from __future__ import annotations

import math
import struct
from dataclasses import dataclass

import numpy as np

from . import kernels

MODEL_STRUCT = struct.Struct("<ddI")
MODEL_SIZE = MODEL_STRUCT.size


class ModelError(Exception):
    pass


@dataclass(frozen=True)
class LinearModel:
    slope: float
    intercept: float
    num_slots: int

    def predict(self, key: int) -> int:
        s = math.floor(self.slope * key + self.intercept)
        if s < 0:
            return 0
        if s >= self.num_slots:
            return self.num_slots - 1
        return s

    def predict_batch(self, keys: np.ndarray) -> np.ndarray:
        return kernels.predict_slots(keys.astype(np.float64), self.slope, self.intercept, self.num_slots)

    def pack(self) -> bytes:
        return MODEL_STRUCT.pack(self.slope, self.intercept, self.num_slots)

    @classmethod
    def unpack(cls, data: bytes, offset: int = 0) -> "LinearModel":
        slope, intercept, num_slots = MODEL_STRUCT.unpack_from(data, offset)
        return cls(slope, intercept, num_slots)


def predict(model: LinearModel, key: int) -> int:
    return model.predict(key)


def conflict_degree(model: LinearModel, keys) -> int:
    """Largest number of keys the model maps to one slot (sorted input)."""
    arr = np.asarray(keys, dtype=np.float64)
    if arr.size == 0:
        return 0
    slots = kernels.predict_slots(arr, model.slope, model.intercept, model.num_slots)
    return kernels.max_run_length(slots)


def _single_key_model(key: int, num_slots: int) -> LinearModel:
    return LinearModel(1.0, -float(key), num_slots)


def _interpolation_model(lo: float, hi: float, num_slots: int) -> LinearModel:
    if num_slots < 2:
        slope = 0.5 / (hi - lo)
    else:
        slope = (num_slots - 1) / (hi - lo)
    return LinearModel(slope, -slope * lo, num_slots)


def build_model(keys, num_slots: int) -> LinearModel:
    """Fit a monotonic model over sorted distinct keys.

    The returned model's conflict degree never exceeds that of the plain
    min/max interpolation model.  Deterministic for fixed inputs.
    """
    if num_slots < 1:
        raise ModelError("num_slots must be >= 1")
    arr = np.asarray(keys, dtype=np.uint64)
    n = int(arr.size)
    if n == 0:
        raise ModelError("cannot fit a model over zero keys")
    f = arr.astype(np.float64)
    if n > 1:
        if np.any(arr[1:] < arr[:-1]):
            raise ModelError("keys must be sorted ascending")
        if np.any(arr[1:] == arr[:-1]):
            raise ModelError("keys must be distinct")
    if n == 1:
        return _single_key_model(int(arr[0]), num_slots)

    lo, hi = float(f[0]), float(f[-1])
    if hi <= lo:
        # distinct u64 keys collapsed in double precision
        return _single_key_model(int(arr[0]), num_slots)
    interp = _interpolation_model(lo, hi, num_slots)
    if num_slots < 2:
        return interp

    max_slope = (num_slots - 1) / (hi - lo)

    def feasible(d: int) -> float | None:
        g = kernels.min_gap(f, d)
        if g > 0 and 1.0 / g <= max_slope:
            return g
        return None

    # doubling sweep for the first feasible window width
    prev_infeasible = 0
    d = 1
    chosen = None
    while True:
        d_eff = min(d, n - 1)
        g = feasible(d_eff)
        if g is not None:
            chosen = (d_eff, g)
            break
        if d_eff == n - 1:
            return interp
        prev_infeasible = d_eff
        d *= 2
    # linear refinement down to the smallest feasible width
    for cand in range(prev_infeasible + 1, chosen[0]):
        g = feasible(cand)
        if g is not None:
            chosen = (cand, g)
            break

    slope = 1.0 / chosen[1]
    model = LinearModel(slope, -slope * lo, num_slots)

    # armor against float pathologies: the fit must stay in range and beat
    # the interpolation baseline, else fall back to the baseline
    slots = kernels.predict_slots(f, model.slope, model.intercept, num_slots)
    raw_first = math.floor(model.slope * lo + model.intercept)
    raw_last = math.floor(model.slope * hi + model.intercept)
    if raw_first < 0 or raw_last > num_slots - 1:
        return interp
    if kernels.max_run_length(slots) > conflict_degree(interp, arr):
        return interp
    return model
