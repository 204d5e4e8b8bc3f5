from fractions import Fraction
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

import oracles
from skewshift.cocycle import (
    CocycleParams,
    ScaledMatrix,
    batch_u,
    companion_norm,
    finite_exponent_u,
    scaled_product,
    spectral_norm,
    transfer_matrix,
)
from skewshift.phase import MOD, TorusCoordinate, TorusPoint, golden_mean, potential_sequence, skew_shift_power

W = golden_mean()
E1 = -2.495123260049612
fracs = st.integers(0, MOD - 1)
points = st.builds(lambda x, y: TorusPoint(TorusCoordinate(x), TorusCoordinate(y)), fracs, fracs)

# u_1000 at (1/3, 1/7), lam = 1/2, from oracles.u_n (float64 math.cos phases,
# 2-norm rescaling every 16 steps)
U1000_E1 = 0.49773298080029005
U1000_E0 = 0.0712597092861965


def test_params_validation():
    with pytest.raises(ValueError):
        CocycleParams(-0.1, 0.0)
    p = CocycleParams(0.5, 1.0)
    assert p.omega == W
    assert p.reflected().energy == -1.0


def test_transfer_matrix_examples():
    p = TorusPoint.from_reals(0, 0)
    assert np.array_equal(transfer_matrix(CocycleParams(0, 0), 7, p), [[0, -1], [1, 0]])
    assert np.array_equal(transfer_matrix(CocycleParams(0.5, 0), 1, p), [[-1, -1], [1, 0]])


@given(points, st.integers(1, 10**6), st.floats(0, 2), st.floats(-6, 6))
def test_transfer_matrix_unimodular(p, n, lam, E):
    assert abs(np.linalg.det(transfer_matrix(CocycleParams(lam, E), n, p)) - 1.0) <= 1e-15


def test_companion_norm_examples():
    assert companion_norm(0.0) == 1.0
    assert math.log(companion_norm(3.5)) <= 4.0 / 3.0


def test_companion_norm_svd_oracle():
    rng = np.random.default_rng(5)
    for a in rng.uniform(-10, 10, 1000):
        assert abs(companion_norm(a) - oracles.svd_norm(a)) <= 1e-12


@given(st.lists(st.floats(-1e3, 1e3), min_size=4, max_size=4))
def test_spectral_norm_matches_numpy(entries):
    m = np.array(entries).reshape(2, 2)
    ref = np.linalg.norm(m, 2)
    assert abs(spectral_norm(m) - ref) <= 1e-12 * max(1.0, ref)
    assert spectral_norm(np.array(entries)) == spectral_norm(m)


def test_rotation_fourth_power_is_identity():
    M = scaled_product(CocycleParams(0, 0), TorusPoint.from_reals(0.2, 0.4), 4)
    assert np.allclose(M.to_array(), np.eye(2), atol=1e-15)
    assert M.log_norm() == pytest.approx(0.0, abs=1e-15)


def test_lambda_zero_constant_matrix():
    u = finite_exponent_u(CocycleParams(0, 3.0), TorusPoint.from_reals(0.1, 0.2), 1000)
    assert abs(u - math.log((3 + math.sqrt(5)) / 2)) <= 1e-3


@given(points, st.integers(1, 5000))
def test_lambda_zero_energy_zero_exact(p, n):
    assert finite_exponent_u(CocycleParams(0, 0), p, n) == 0.0


def test_against_independent_product_oracle():
    p = TorusPoint.from_reals(Fraction(1, 3), Fraction(1, 7))
    assert finite_exponent_u(CocycleParams(0.5, E1), p, 1000) == pytest.approx(U1000_E1, abs=1e-12)
    assert finite_exponent_u(CocycleParams(0.5, 0.0), p, 1000) == pytest.approx(U1000_E0, abs=1e-12)
    v = oracles.potentials(1000, p.x.frac, p.y.frac, W.frac.frac)
    assert oracles.u_n(v, 0.5, E1) == pytest.approx(U1000_E1, abs=1e-14)


def test_typical_e1_magnitude():
    rng = np.random.default_rng(2)
    xs, ys = rng.integers(0, 2**64 - 1, size=(2, 64), dtype=np.uint64)
    u = batch_u(CocycleParams(0.5, E1), xs, ys, [30_000])[0]
    assert abs(np.median(u) - 0.4656) < 0.02


def test_cocycle_identity():
    rng = np.random.default_rng(8)
    params = CocycleParams(0.5, 0.3)
    for _ in range(20):
        m, n = (int(v) for v in rng.integers(1, 10_000, size=2))
        p = TorusPoint(*(TorusCoordinate(int(f)) for f in rng.integers(0, 2**64 - 1, size=2, dtype=np.uint64)))
        whole = scaled_product(params, p, m + n)
        split = scaled_product(params, skew_shift_power(p, n, W), m) @ scaled_product(params, p, n)
        assert whole.relative_distance(split) <= 1e-10


@given(points, st.integers(1, 3000), st.floats(0, 1.5), st.floats(-5, 5))
def test_half_shift_reflection(p, n, lam, E):
    q = TorusPoint(p.x.shifted_half(), p.y)
    a = finite_exponent_u(CocycleParams(lam, E), p, n)
    b = finite_exponent_u(CocycleParams(lam, -E), q, n)
    assert abs(a - b) <= 1e-12


@given(points, st.integers(1, 5000), st.floats(0, 1.5), st.floats(-5, 5))
def test_nonnegative(p, n, lam, E):
    assert finite_exponent_u(CocycleParams(lam, E), p, n) >= -1e-12


@given(points, st.integers(1, 5000), st.sampled_from([1.5, 4.0, 2.0**20]))
def test_renormalization_neutral(p, n, renorm):
    params = CocycleParams(0.5, -1.1)
    base = finite_exponent_u(params, p, n)
    assert abs(finite_exponent_u(params, p, n, renorm=renorm) - base) <= 1e-12
    assert abs(finite_exponent_u(params, p, n, renorm=2 * renorm) - base) <= 1e-12


@given(points, st.integers(1, 60_000), st.sampled_from([0.0, E1, 1.7]))
def test_unit_determinant(p, n, E):
    """det(m) exp(2 log_scale) = 1 up to the cancellation error eps * ||M||_F**2 of a 2x2 determinant."""
    M = scaled_product(CocycleParams(0.5, E), p, n)
    f2 = float(np.sum(M.m * M.m))
    # compare at the scale of m so nothing overflows: det(m) vs exp(-2 log_scale)
    err = abs(np.linalg.det(M.m) - math.exp(-2 * M.log_scale))
    assert err <= 1e-9 * math.exp(-2 * M.log_scale) + 1e-13 * f2


@given(points, st.integers(1, 8))
def test_unit_determinant_strict_small_n(p, n):
    M = scaled_product(CocycleParams(0.5, 0.0), p, n)
    assert abs(np.linalg.det(M.m) * math.exp(2 * M.log_scale) - 1.0) <= 1e-9


@pytest.mark.parametrize("E", [0.0, 1.0, -1.9])
def test_unit_determinant_bounded_products(E):
    """Elliptic products stay O(1), so the determinant is checkable at n = 60000."""
    M = scaled_product(CocycleParams(0.0, E), TorusPoint.from_reals(0.3, 0.6), 60_000)
    assert abs(np.linalg.det(M.m) * math.exp(2 * M.log_scale) - 1.0) <= 1e-9


def test_frobenius_after_renormalization():
    rng = np.random.default_rng(1)
    xs, ys = rng.integers(0, 2**64 - 1, size=(2, 40), dtype=np.uint64)
    from skewshift.cocycle import batch_products

    m, _ = batch_products(CocycleParams(0.5, 0.0), xs, ys, [31_000])
    f = np.sqrt(np.sum(m * m, axis=-1))
    assert np.all((f >= 0.5 / 4) & (f <= 2 * 4))


def test_scaled_matrix_algebra():
    a = ScaledMatrix(np.array([[2.0, 1.0], [1.0, 1.0]]), 3.0)
    b = ScaledMatrix.identity()
    c = a @ b
    assert c.relative_distance(a) < 1e-15
    assert c.log_abs_det() == pytest.approx(6.0)
    assert a.log_norm() == pytest.approx(3.0 + math.log(np.linalg.norm(a.m, 2)))


def test_length_guards():
    p = TorusPoint.from_reals(0, 0)
    with pytest.raises(ValueError):
        finite_exponent_u(CocycleParams(0.5, 0), p, 0)
    with pytest.raises(ValueError):
        scaled_product(CocycleParams(0.5, 0), p, 2**32 + 1)


def test_pointwise_subadditivity():
    rng = np.random.default_rng(4)
    params = CocycleParams(0.5, E1)
    for _ in range(20):
        m, n = (int(v) for v in rng.integers(1, 10_000, size=2))
        p = TorusPoint(*(TorusCoordinate(int(f)) for f in rng.integers(0, 2**64 - 1, size=2, dtype=np.uint64)))
        lhs = scaled_product(params, p, m + n).log_norm()
        rhs = scaled_product(params, skew_shift_power(p, n, W), m).log_norm() + scaled_product(params, p, n).log_norm()
        assert lhs <= rhs + 1e-9


def test_potential_sequence_drives_products():
    """Products from the kernel agree with products of explicit transfer matrices."""
    p = TorusPoint.from_reals(0.11, 0.83)
    params = CocycleParams(0.7, 0.4)
    v = potential_sequence(p, W, 200)
    m = np.eye(2)
    for vj in v:
        m = np.array([[params.energy - params.lam * vj, -1.0], [1.0, 0.0]]) @ m
    M = scaled_product(params, p, 200)
    assert ScaledMatrix(m, 0.0).relative_distance(M) < 1e-12
