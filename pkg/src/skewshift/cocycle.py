"""Transfer matrices, overflow-free cocycle products and the exponent u_n."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import _backend
from .phase import MAX_INDEX, FrequencyOmega, TorusPoint, golden_mean, potential

DEFAULT_RENORM = 2.0


@dataclass(frozen=True)
class CocycleParams:
    """Coupling, energy and frequency of one Schrodinger cocycle family."""

    lam: float
    energy: float
    omega: FrequencyOmega = field(default_factory=golden_mean)

    def __post_init__(self):
        if not self.lam >= 0:
            raise ValueError(f"coupling must be nonnegative, got {self.lam}")

    def reflected(self) -> "CocycleParams":
        return CocycleParams(self.lam, -self.energy, self.omega)


@dataclass
class ScaledMatrix:
    """The 2x2 matrix ``exp(log_scale) * m``."""

    m: np.ndarray
    log_scale: float = 0.0

    @classmethod
    def identity(cls) -> "ScaledMatrix":
        return cls(np.eye(2), 0.0)

    def renormalized(self) -> "ScaledMatrix":
        f = float(np.sqrt(np.sum(self.m * self.m)))
        return ScaledMatrix(self.m / f, self.log_scale + math.log(f))

    def __matmul__(self, other: "ScaledMatrix") -> "ScaledMatrix":
        return ScaledMatrix(self.m @ other.m, self.log_scale + other.log_scale).renormalized()

    def log_norm(self) -> float:
        """log of the spectral norm of the represented matrix."""
        return self.log_scale + math.log(spectral_norm(self.m))

    def log_abs_det(self) -> float:
        d = float(np.linalg.det(self.m))
        return 2.0 * self.log_scale + math.log(abs(d)) if d != 0.0 else -math.inf

    def relative_distance(self, other: "ScaledMatrix") -> float:
        """||A - B||_F / ||A||_F between the represented matrices, overflow-free."""
        ratio = math.exp(other.log_scale - self.log_scale)
        diff = self.m - ratio * other.m
        return float(np.sqrt(np.sum(diff * diff)) / np.sqrt(np.sum(self.m * self.m)))

    def to_array(self) -> np.ndarray:
        """The represented matrix itself; overflows for large log_scale."""
        return math.exp(self.log_scale) * self.m


def spectral_norm(m) -> np.ndarray | float:
    """Largest singular value of 2x2 matrices given as ``(..., 2, 2)`` or ``(..., 4)``.

    Uses sigma_max = (|(a+d, b-c)| + |(a-d, b+c)|) / 2, free of cancellation.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.shape[-2:] == (2, 2):
        a, b, c, d = m[..., 0, 0], m[..., 0, 1], m[..., 1, 0], m[..., 1, 1]
    else:
        a, b, c, d = m[..., 0], m[..., 1], m[..., 2], m[..., 3]
    return 0.5 * (np.hypot(a + d, b - c) + np.hypot(a - d, b + c))


def transfer_matrix(params: CocycleParams, n: int, p: TorusPoint) -> np.ndarray:
    """A_n = [[E - lam v_n, -1], [1, 0]]."""
    a = params.energy - params.lam * potential(n, p, params.omega)
    return np.array([[a, -1.0], [1.0, 0.0]])


def companion_norm(a: float) -> float:
    """Operator norm of [[a, -1], [1, 0]] by its closed form."""
    a = abs(a)
    return math.sqrt(2.0 + a * a + a * math.sqrt(4.0 + a * a)) / math.sqrt(2.0)


def _check_length(n: int):
    if n < 1:
        raise ValueError("cocycle products need n >= 1")
    if n > MAX_INDEX:
        raise ValueError("cocycle length exceeds 2**32")


def batch_products(params: CocycleParams, xs, ys, scales, renorm=DEFAULT_RENORM, backend=None,
                   compensated=False):
    """Scaled products M_n at several scales for arrays of uint64 coordinates.

    Returns ``(m, log_scale)`` shaped ``(S, P, 4)`` and ``(S, P)``. With
    ``compensated`` the entries are accumulated in double-double and rounded
    once at the end, about twice as slow.
    """
    scales = np.asarray(sorted(int(s) for s in scales), dtype=np.int64)
    for s in scales:
        _check_length(int(s))
    xs = np.ascontiguousarray(xs, dtype=np.uint64)
    ys = np.ascontiguousarray(ys, dtype=np.uint64)
    k = _backend.get(backend)
    fn = k.products_dd if compensated else k.products
    return fn(xs, ys, params.omega.frac.frac, float(params.lam), float(params.energy), scales, float(renorm))


def batch_u(params: CocycleParams, xs, ys, scales, renorm=DEFAULT_RENORM, backend=None) -> np.ndarray:
    """u_n at each scale for arrays of uint64 coordinates; shape ``(S, P)``."""
    scales = sorted(int(s) for s in scales)
    m, ls = batch_products(params, xs, ys, scales, renorm=renorm, backend=backend)
    n = np.asarray(scales, dtype=np.float64)[:, None]
    return (ls + np.log(spectral_norm(m))) / n


def scaled_product(params: CocycleParams, p: TorusPoint, n: int, renorm=DEFAULT_RENORM, backend=None,
                   compensated=True) -> ScaledMatrix:
    """M_n(p) = A_n ... A_1 in scaled form.

    Compensated accumulation is the default here: near the spectrum the
    plain recursion loses relative accuracy roughly like n * eps * cond.
    """
    _check_length(n)
    m, ls = batch_products(params, [p.x.frac], [p.y.frac], [n], renorm=renorm, backend=backend,
                           compensated=compensated)
    return ScaledMatrix(m[0, 0].reshape(2, 2).copy(), float(ls[0, 0]))


def finite_exponent_u(params: CocycleParams, p: TorusPoint, n: int, renorm=DEFAULT_RENORM, backend=None) -> float:
    """u_n(p) = log||M_n(p)|| / n with the spectral norm."""
    _check_length(n)
    return float(batch_u(params, [p.x.frac], [p.y.frac], [n], renorm=renorm, backend=backend)[0, 0])
