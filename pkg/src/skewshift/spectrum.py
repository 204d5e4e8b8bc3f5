"""Finite-volume Hamiltonians H_N(x, y; lam) and their spectra.

H_N is tridiagonal with diagonal lam * v_j(x, y), j = 1..N, and unit
off-diagonals. Eigenvalues come from Sturm-sequence bisection, which can
target a window of energies without touching the rest of the spectrum.
"""

from __future__ import annotations

import logging
from collections import Counter
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from . import _backend
from .grid import GridSpec
from .phase import FrequencyOmega, TorusCoordinate, TorusPoint, potential_sequence

log = logging.getLogger(__name__)

MAX_FULL_SPECTRUM = 2000
SINGULAR_JITTER = 1e-14


@dataclass
class TridiagonalHamiltonian:
    diag: np.ndarray
    lam: float
    point: TorusPoint | None = None
    omega: FrequencyOmega | None = None

    @property
    def N(self) -> int:
        return len(self.diag)

    def dense(self) -> np.ndarray:
        N = self.N
        return np.diag(self.diag) + np.eye(N, k=1) + np.eye(N, k=-1)

    def matvec(self, v) -> np.ndarray:
        out = self.diag * v
        out[:-1] += v[1:]
        out[1:] += v[:-1]
        return out

    def spectral_radius_bound(self) -> float:
        """Gershgorin: every eigenvalue lies strictly inside (-B, B)."""
        return float(np.max(np.abs(self.diag))) + 2.0 if self.N else 2.0

    def leading_block(self, k: int) -> "TridiagonalHamiltonian":
        return TridiagonalHamiltonian(self.diag[:k].copy(), self.lam, self.point, self.omega)


@dataclass
class SpectrumHistogram:
    bin_edges: np.ndarray
    counts: np.ndarray
    grid: GridSpec
    N: int
    lam: float

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def peak(self, side: str = "any") -> tuple[float, float, int]:
        """(left edge, right edge, count) of the tallest bin, optionally per half-line."""
        mid = 0.5 * (self.bin_edges[:-1] + self.bin_edges[1:])
        mask = {"any": np.ones_like(mid, bool), "left": mid < 0, "right": mid > 0}[side]
        idx = np.flatnonzero(mask)
        k = idx[np.argmax(self.counts[idx])]
        return float(self.bin_edges[k]), float(self.bin_edges[k + 1]), int(self.counts[k])


def build_hamiltonian(p: TorusPoint, lam: float, omega: FrequencyOmega, N: int, backend=None) -> TridiagonalHamiltonian:
    if N < 1:
        raise ValueError("N must be positive")
    diag = lam * potential_sequence(p, omega, N, backend=backend)
    return TridiagonalHamiltonian(diag, lam, p, omega)


def sturm_count(H: TridiagonalHamiltonian, E: float, backend=None) -> int:
    """Number of eigenvalues strictly below E."""
    k = _backend.get(backend)
    return int(k.sturm_counts(np.ascontiguousarray(H.diag), np.array([E], dtype=np.float64))[0])


def sturm_counts(H: TridiagonalHamiltonian, energies, backend=None) -> np.ndarray:
    k = _backend.get(backend)
    return k.sturm_counts(np.ascontiguousarray(H.diag), np.ascontiguousarray(energies, dtype=np.float64))


def eigenvalues_bisection(H: TridiagonalHamiltonian, tol: float = 1e-12, window=None, backend=None) -> np.ndarray:
    """Ascending eigenvalues, each bracketed to width <= tol.

    With ``window=(a, b)`` only the eigenvalues in [a, b) are computed.
    Brackets start from +-B with B a Gershgorin bound, so H and -H follow
    mirrored bisection paths and their spectra come out exact negatives.
    """
    if not tol > 0:
        raise ValueError("tol must be positive")
    k = _backend.get(backend)
    diag = np.ascontiguousarray(H.diag, dtype=np.float64)
    if window is None:
        B = H.spectral_radius_bound()
        lo, hi = -B, B
        ranks = np.arange(H.N, dtype=np.int64)
    else:
        lo, hi = float(window[0]), float(window[1])
        if not lo < hi:
            raise ValueError("empty window")
        c = k.sturm_counts(diag, np.array([lo, hi]))
        ranks = np.arange(c[0], c[1], dtype=np.int64)
    if ranks.size == 0:
        return np.empty(0)
    return np.sort(k.bisect(diag, ranks, lo, hi, tol))


def _grid_map(func, grid: GridSpec, threads: int):
    xs, ys = grid.points()
    pts = [TorusPoint(TorusCoordinate(int(x)), TorusCoordinate(int(y))) for x, y in zip(xs, ys)]
    if threads <= 1:
        return [func(p) for p in pts]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(func, pts))


def grid_spectra(lam: float, omega: FrequencyOmega, N: int, grid: GridSpec, tol: float = 1e-10,
                 window=None, threads: int = 1, backend=None) -> list[np.ndarray]:
    """Eigenvalues of H_N(x, y) for every grid point, in grid order."""

    def one(p):
        return eigenvalues_bisection(build_hamiltonian(p, lam, omega, N, backend), tol, window, backend)

    return _grid_map(one, grid, threads)


def window_counts(lam: float, omega: FrequencyOmega, N: int, grid: GridSpec, a: float, b: float,
                  threads: int = 1, backend=None) -> np.ndarray:
    """Number of eigenvalues of H_N(x, y) in [a, b) per grid point, shape (G, G)."""
    def one(p):
        c = sturm_counts(build_hamiltonian(p, lam, omega, N, backend), [a, b], backend)
        return int(c[1] - c[0])

    G = grid.points_per_axis
    return np.array(_grid_map(one, grid, threads), dtype=np.int64).reshape(G, G)


def symmetric_edges(span: float, bins: int) -> np.ndarray:
    """Uniform edges on [-span, span] that are exact negatives of each other."""
    k = np.arange(bins + 1)
    return span * (2 * k - bins).astype(np.float64) / bins


def eigen_histogram(lam: float, omega: FrequencyOmega, N: int, grid: GridSpec, bins: int = 1200,
                    span: float | None = None, tol: float = 1e-10, threads: int = 1, backend=None) -> SpectrumHistogram:
    """Histogram of all eigenvalues of H_N over the grid.

    Bins are [left, right) on [-span, span], span = 2 + 2 lam by default.
    """
    if bins < 1:
        raise ValueError("need at least one bin")
    if span is None:
        span = 2.0 + 2.0 * lam
    edges = symmetric_edges(span, bins)
    counts = np.zeros(bins, dtype=np.int64)
    for ev in grid_spectra(lam, omega, N, grid, tol, threads=threads, backend=backend):
        idx = np.clip(np.searchsorted(edges, ev, side="right") - 1, 0, bins - 1)
        counts += np.bincount(idx, minlength=bins)
    return SpectrumHistogram(edges, counts, grid, N, lam)


def round_half_away(values, digits: int) -> np.ndarray:
    """Integer keys round(value * 10**digits), halves rounded away from zero."""
    scaled = np.asarray(values, dtype=np.float64) * 10.0**digits
    return (np.sign(scaled) * np.floor(np.abs(scaled) + 0.5)).astype(np.int64)


class ModalEnergy(NamedTuple):
    energy: float
    multiplicity: int


def rounded_energy_counts(spectra, digits: int) -> Counter:
    counts = Counter()
    for ev in spectra:
        keys, c = np.unique(round_half_away(ev, digits), return_counts=True)
        counts.update(dict(zip(keys.tolist(), c.tolist())))
    return counts


def modal_from_counts(counts: Counter, digits: int) -> ModalEnergy:
    if not counts:
        raise ValueError("no eigenvalues to rank")
    top = max(counts.values())
    key = min(k for k, c in counts.items() if c == top)
    return ModalEnergy(key / 10.0**digits, top)


def modal_energy(lam: float, omega: FrequencyOmega, N: int, grid: GridSpec, rounding_digits: int = 8,
                 window=None, tol: float | None = None, threads: int = 1, backend=None) -> ModalEnergy:
    """Most frequent eigenvalue over the grid after rounding to ``rounding_digits`` decimals.

    Ties go to the smaller energy. ``window`` restricts the search to [a, b).
    """
    if not 1 <= rounding_digits <= 12:
        raise ValueError("rounding_digits must lie in [1, 12]")
    if tol is None:
        tol = 10.0 ** -(rounding_digits + 3)
    spectra = grid_spectra(lam, omega, N, grid, tol, window, threads, backend)
    return modal_from_counts(rounded_energy_counts(spectra, rounding_digits), rounding_digits)


def inverse_iteration(H: TridiagonalHamiltonian, E: float, iterations: int = 3) -> tuple[np.ndarray, float]:
    """Unit vector from shifted inverse iteration at E and its residual ||(H - E) psi||."""
    if iterations < 1:
        raise ValueError("need at least one iteration")
    N = H.N
    shift = E
    psi = np.random.default_rng(0).standard_normal(N)
    psi /= np.linalg.norm(psi)
    for _ in range(iterations):
        ab = np.zeros((3, N))
        ab[0, 1:] = 1.0
        ab[1] = H.diag - shift
        ab[2, :-1] = 1.0
        try:
            x = solve_banded((1, 1), ab, psi)
        except LinAlgError:
            shift = shift + SINGULAR_JITTER
            log.debug("singular shift at %r, jittered to %r", E, shift)
            continue
        psi = x / np.linalg.norm(x)
    r = H.matvec(psi) - E * psi
    return psi, float(np.linalg.norm(r))


def residual_distance(H: TridiagonalHamiltonian, E: float, iterations: int = 3) -> float:
    """Upper bound on dist(E, spec H_N) from the residual of a unit vector."""
    return inverse_iteration(H, E, iterations)[1]


def max_gap(values, interval) -> float:
    """Largest gap between consecutive values in [a, b], endpoints included."""
    a, b = float(interval[0]), float(interval[1])
    v = np.asarray(values, dtype=np.float64)
    v = np.sort(v[(v >= a) & (v <= b)])
    if v.size == 0:
        raise ValueError("no values inside the interval")
    return float(np.max(np.diff(np.concatenate(([a], v, [b])))))
