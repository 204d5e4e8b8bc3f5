"""Sample sets on the torus and the deterministic sweep/reduction machinery."""

from __future__ import annotations

import hashlib
import json
import logging
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .phase import MASK, MOD

log = logging.getLogger(__name__)

CHUNK = 2048


@dataclass(frozen=True)
class GridSpec:
    """A G x G regular grid on [0, 1]^2.

    With ``inclusive_endpoints`` the axis samples are i/(G-1) (both 0 and 1,
    which coincide on the torus); otherwise the periodic samples i/G.
    """

    points_per_axis: int
    inclusive_endpoints: bool = True

    def __post_init__(self):
        if self.points_per_axis < 2:
            raise ValueError("a grid needs at least 2 points per axis")

    @property
    def size(self) -> int:
        return self.points_per_axis**2

    @property
    def half_shift_invariant(self) -> bool:
        """True when x -> x + 1/2 permutes the grid."""
        return not self.inclusive_endpoints and self.points_per_axis % 2 == 0

    def axis_fracs(self) -> np.ndarray:
        G = self.points_per_axis
        d = G - 1 if self.inclusive_endpoints else G
        # nearest multiple of 2**-64 to i/d, in exact integer arithmetic
        fr = [((2 * i * MOD + d) // (2 * d)) & MASK for i in range(G)]
        return np.array(fr, dtype=np.uint64)

    def axis_reals(self) -> np.ndarray:
        G = self.points_per_axis
        d = G - 1 if self.inclusive_endpoints else G
        return np.arange(G) / d

    def points(self) -> tuple[np.ndarray, np.ndarray]:
        """Flattened (xs, ys) as uint64 fractions; x is the slow index."""
        c = self.axis_fracs()
        G = self.points_per_axis
        return np.repeat(c, G), np.tile(c, G)

    def describe(self) -> dict:
        return {"points_per_axis": self.points_per_axis, "inclusive_endpoints": self.inclusive_endpoints}


def mc_points(count: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """``count`` uniform points of the torus from Philox-4x64 keyed by ``seed``.

    x_i and y_i are raw outputs 2i and 2i+1 of the stream, each read directly
    as a 64-bit fixed-point fraction, so points are exact and the draw is
    independent of how the evaluation is later partitioned.
    """
    if count < 1:
        raise ValueError("need at least one sample")
    bits = np.random.Philox(seed & MASK).random_raw(2 * count)
    return np.ascontiguousarray(bits[0::2]), np.ascontiguousarray(bits[1::2])


def pairwise_sum(values) -> float:
    """Sum along a fixed binary tree that depends only on the length."""
    a = np.array(values, dtype=np.float64).ravel()
    if a.size == 0:
        return 0.0
    while a.size > 1:
        if a.size % 2:
            a = np.append(a, 0.0)
        a = a[0::2] + a[1::2]
    return float(a[0])


def pairwise_mean(values) -> float:
    a = np.asarray(values).ravel()
    return pairwise_sum(a) / a.size


def evaluate(func, xs, ys, nrows: int, threads: int = 1, chunk: int = CHUNK) -> np.ndarray:
    """Apply ``func(xs_chunk, ys_chunk) -> (nrows, k)`` over fixed chunks.

    Chunk boundaries do not depend on ``threads``; every point is computed
    independently, so the assembled array is the same for any worker count.
    """
    P = len(xs)
    out = np.empty((nrows, P))
    bounds = [(s, min(s + chunk, P)) for s in range(0, P, chunk)]

    def work(b):
        s, e = b
        out[:, s:e] = func(xs[s:e], ys[s:e])

    if threads <= 1 or len(bounds) == 1:
        for b in bounds:
            work(b)
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(work, bounds))
    return out


def default_threads() -> int:
    return max(1, len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1)


class RowCheckpoint:
    """Resumable per-row storage for long grid sweeps.

    The state file holds the finished rows of the value array plus a
    fingerprint of the run; a mismatching fingerprint starts over.
    """

    def __init__(self, path, fingerprint: dict, shape: tuple[int, ...]):
        self.path = Path(path)
        self.key = hashlib.sha256(json.dumps(fingerprint, sort_keys=True).encode()).hexdigest()
        self.values = np.full(shape, np.nan)
        self.rows_done = 0
        if self.path.exists():
            with np.load(self.path) as state:
                if str(state["key"]) == self.key and state["values"].shape == shape:
                    self.values = state["values"].copy()
                    self.rows_done = int(state["rows_done"])
                    log.info("resuming %s at row %d", self.path, self.rows_done)

    def save(self, rows_done: int):
        self.rows_done = rows_done
        tmp = self.path.with_name(self.path.name + ".tmp.npz")
        np.savez(tmp, key=self.key, values=self.values, rows_done=rows_done)
        os.replace(tmp, self.path)
