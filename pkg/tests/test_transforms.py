"""Tests for the marginal transforms, Jacobians, and back-transformed density.

Oracles: finite-difference derivatives for the Jacobian, adaptive quadrature
for density normalization.  Normalization sweeps pick (lambda, mu, sigma)
combinations whose Gaussian mass outside the transform's range is below 1e-5,
since outside [0, 2] the power transform (and Manly for any lambda != 0) maps
R onto a half-line.
"""

import math

import numpy as np
import pytest
from scipy.integrate import quad

from skewmix.densities import GaussianParams, log_density_gaussian
from skewmix.transforms import (
    MANLY,
    POWER,
    TransformRangeError,
    TransformVector,
    TransGaussianParams,
    apply_transform,
    log_density_trans_gaussian,
    log_jacobian,
    log_jacobian_rows,
    transform_manly,
    transform_power,
)

# ------------------------------------------------------------- transforms


def test_power_identity_at_lambda_one():
    for x in [-5.0, -0.5, 0.0, 0.3, 7.0]:
        assert transform_power(x, 1.0) == pytest.approx(x, abs=1e-14)


def test_power_log_branches():
    assert transform_power(3.0, 0.0) == pytest.approx(math.log(4.0), rel=1e-12)
    assert transform_power(-3.0, 2.0) == pytest.approx(-math.log(4.0), rel=1e-12)


def test_manly_branches():
    assert transform_manly(5.0, 0.0) == 5.0
    assert transform_manly(1.0, 1.0) == pytest.approx(math.e - 1.0, rel=1e-12)
    assert transform_manly(2.0, -1.0) == pytest.approx(
        (math.exp(-2.0) - 1.0) / (-1.0), rel=1e-12)


def test_manly_overflow_signals_range_error():
    with pytest.raises(TransformRangeError):
        transform_manly(800.0, 1.0)
    t = TransformVector(MANLY, [1.0, 0.1])
    with pytest.raises(TransformRangeError):
        apply_transform(np.array([[800.0, 0.0]]), t)


def test_transform_vector_validation():
    with pytest.raises(ValueError):
        TransformVector("box-cox", [1.0])
    with pytest.raises(ValueError):
        TransformVector(POWER, [np.nan])


@pytest.mark.parametrize("lam", [-1.5, -0.3, 0.0, 0.5, 1.0, 1.9, 2.0, 3.1])
def test_power_strictly_increasing(lam):
    x = np.linspace(-8.0, 8.0, 400)
    y = transform_power(x, lam)
    assert np.all(np.diff(y) > 0)


@pytest.mark.parametrize("lam", [-0.8, -0.2, 0.0, 0.3, 1.0])
def test_manly_strictly_increasing(lam):
    x = np.linspace(-8.0, 8.0, 400)
    y = transform_manly(x, lam)
    assert np.all(np.diff(y) > 0)


@pytest.mark.parametrize("fn,lam0", [
    (transform_power, 0.0),
    (transform_power, 2.0),
    (transform_manly, 0.0),
])
def test_branch_continuity_in_lambda(fn, lam0):
    x = np.linspace(-6.0, 6.0, 101)
    base = fn(x, lam0)
    for eps in (1e-9, -1e-9):
        near = fn(x, lam0 + eps)
        assert np.max(np.abs(near - base) / (1.0 + np.abs(base))) < 1e-7


def test_power_continuous_in_x_at_zero():
    for lam in [-0.5, 0.0, 1.3, 2.0, 2.5]:
        lo = transform_power(-1e-12, lam)
        hi = transform_power(1e-12, lam)
        assert abs(hi - lo) < 1e-11


# -------------------------------------------------------------- jacobians


def test_log_jacobian_identity_power():
    t = TransformVector(POWER, [1.0, 1.0, 1.0])
    rng = np.random.default_rng(0)
    for _ in range(5):
        assert log_jacobian(rng.standard_normal(3) * 3, t) == 0.0


def test_log_jacobian_manly_inner_product():
    t = TransformVector(MANLY, [0.5, 2.0])
    assert log_jacobian(np.array([1.0, -2.0]), t) == pytest.approx(-3.5,
                                                                   rel=1e-14)


def test_log_jacobian_power_example():
    t = TransformVector(POWER, [2.0, 3.0])
    want = math.log(2.0) - 2.0 * math.log(3.0)
    assert log_jacobian(np.array([1.0, -2.0]), t) == pytest.approx(want,
                                                                   rel=1e-12)


@pytest.mark.parametrize("kind,lam_lo,lam_hi", [
    (POWER, -1.0, 3.0),
    (MANLY, -1.0, 1.0),
])
def test_log_jacobian_matches_finite_differences(kind, lam_lo, lam_hi):
    rng = np.random.default_rng(21)
    fn = transform_power if kind == POWER else transform_manly
    for _ in range(30):
        p = rng.integers(1, 5)
        lambdas = rng.uniform(lam_lo, lam_hi, size=p)
        x = rng.uniform(-3.0, 3.0, size=p)
        t = TransformVector(kind, lambdas)
        fd = 0.0
        for j in range(p):
            h = 1e-6 * (1.0 + abs(x[j]))
            deriv = (fn(x[j] + h, lambdas[j]) - fn(x[j] - h, lambdas[j])) / (2 * h)
            fd += math.log(deriv)
        assert log_jacobian(x, t) == pytest.approx(fd, abs=1e-6)


def test_log_jacobian_rows_matches_scalar():
    rng = np.random.default_rng(4)
    X = rng.uniform(-2, 2, size=(6, 3))
    for t in [TransformVector(POWER, [0.5, 2.0, -0.3]),
              TransformVector(MANLY, [0.2, -0.1, 0.4])]:
        rows = log_jacobian_rows(X, t)
        np.testing.assert_allclose(rows, [log_jacobian(x, t) for x in X],
                                   rtol=1e-14)


# ------------------------------------------------ back-transformed density


def test_identity_transform_reduces_to_gaussian():
    rng = np.random.default_rng(8)
    mu = np.array([0.3, -0.2])
    sigma = np.array([[1.2, 0.3], [0.3, 0.9]])
    gp = GaussianParams(mu, sigma)
    power_id = TransGaussianParams(TransformVector(POWER, [1.0, 1.0]), mu, sigma)
    manly_id = TransGaussianParams(TransformVector(MANLY, [0.0, 0.0]), mu, sigma)
    for _ in range(10):
        x = rng.standard_normal(2)
        want = log_density_gaussian(x, gp)
        assert log_density_trans_gaussian(x, power_id) == pytest.approx(
            want, rel=1e-12)
        assert log_density_trans_gaussian(x, manly_id) == pytest.approx(
            want, rel=1e-12)


def _mass(params, lo, hi):
    val, _ = quad(lambda x: math.exp(
        log_density_trans_gaussian(np.array([x]), params)), lo, hi, limit=500)
    return val


def test_power_half_lambda_normalizes():
    params = TransGaussianParams(TransformVector(POWER, [0.5]), [0.0], [[1.0]])
    assert _mass(params, -50.0, 200.0) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("lam,mu,var,lo,hi", [
    (0.0, 0.0, 1.0, -50.0, 5000.0),
    (1.0, 0.0, 1.0, -10.0, 10.0),
    (1.7, 0.0, 1.0, -500.0, 20.0),
    (2.0, 0.0, 1.0, -5000.0, 20.0),
    # outside [0, 2] the image is a half-line; casewise (mu, sigma) keep the
    # out-of-range Gaussian mass below 1e-5
    (2.5, 1.0, 0.25, -2000.0, 20.0),
    (-0.5, -1.0, 0.25, -20.0, 2000.0),
])
def test_power_normalization_sweep(lam, mu, var, lo, hi):
    params = TransGaussianParams(TransformVector(POWER, [lam]), [mu], [[var]])
    assert _mass(params, lo, hi) == pytest.approx(1.0, abs=1e-4)


@pytest.mark.parametrize("lam,mu,var,lo,hi", [
    (0.0, 0.3, 1.44, -15.0, 15.0),
    (0.5, 2.0, 0.64, -300.0, 10.0),
    (-0.4, -1.0, 0.64, -30.0, 300.0),
])
def test_manly_normalization_sweep(lam, mu, var, lo, hi):
    params = TransGaussianParams(TransformVector(MANLY, [lam]), [mu], [[var]])
    assert _mass(params, lo, hi) == pytest.approx(1.0, abs=1e-4)


def test_trans_density_vectorizes():
    params = TransGaussianParams(TransformVector(POWER, [0.5, 1.5]),
                                 [0.0, 0.0], np.eye(2))
    rng = np.random.default_rng(12)
    X = rng.uniform(-2, 2, size=(7, 2))
    batch = log_density_trans_gaussian(X, params)
    np.testing.assert_allclose(
        batch, [log_density_trans_gaussian(x, params) for x in X], rtol=1e-14)
