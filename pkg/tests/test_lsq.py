import numpy as np
import pytest
from scipy.optimize import least_squares

from wgmkit.lsq import levenberg_marquardt, numeric_jacobian, scaled_covariance


def test_rosenbrock():
    fun = lambda p: np.array([10 * (p[1] - p[0] ** 2), 1 - p[0]])
    res = levenberg_marquardt(fun, np.array([-1.2, 1.0]))
    assert res.converged
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-9)


def test_matches_scipy_on_exponential():
    rng = np.random.default_rng(3)
    t = np.linspace(0, 4, 60)
    y = 2.5 * np.exp(-1.3 * t) + 0.4 + rng.normal(0, 0.01, t.size)
    fun = lambda p: p[0] * np.exp(-p[1] * t) + p[2] - y
    ours = levenberg_marquardt(fun, np.array([1.0, 1.0, 0.0]))
    ref = least_squares(fun, [1.0, 1.0, 0.0], method="lm", xtol=1e-15, ftol=1e-15)
    np.testing.assert_allclose(ours.x, ref.x, rtol=1e-7)


def test_numeric_jacobian_linear():
    A = np.array([[1.0, 2.0], [3.0, -4.0], [0.5, 0.0]])
    J = numeric_jacobian(lambda p: A @ p, np.array([0.3, -2.0]))
    np.testing.assert_allclose(J, A, rtol=1e-8)


def test_covariance_linear_model():
    # ordinary least squares: cov = s^2 (X^T X)^-1 with s^2 = RSS/(n - p)
    rng = np.random.default_rng(0)
    X = np.column_stack([np.ones(40), np.linspace(-1, 1, 40)])
    y = X @ [1.0, 2.0] + rng.normal(0, 0.1, 40)
    beta, *_ = np.linalg.lstsq(X, y, rcond=None)
    r = X @ beta - y
    expected = (r @ r / 38) * np.linalg.inv(X.T @ X)
    np.testing.assert_allclose(scaled_covariance(X, r), expected, rtol=1e-12, atol=1e-15)


def test_singular_covariance_raises():
    J = np.column_stack([np.ones(10), np.ones(10)])
    with pytest.raises(np.linalg.LinAlgError):
        scaled_covariance(J, np.ones(10) * 0.1)


def test_non_finite_start_rejected():
    with pytest.raises(ValueError):
        levenberg_marquardt(lambda p: np.array([np.nan]), np.array([1.0]))


def test_max_iter_reports_unconverged():
    fun = lambda p: np.array([10 * (p[1] - p[0] ** 2), 1 - p[0]])
    res = levenberg_marquardt(fun, np.array([-1.2, 1.0]), max_iter=2)
    assert not res.converged and res.reason == "max_iter" and res.iterations == 2
