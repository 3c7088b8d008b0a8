"""Damped (Levenberg-Marquardt) least squares with a finite-difference Jacobian.

Shared by the lineshape and saturation fits. Callers are expected to pass
residual functions whose parameters are of order unity; the finite-difference
step is ``rel_step * max(|p|, 1)``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

ResidualFn = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class LsqResult:
    x: np.ndarray
    residual: np.ndarray
    jac: np.ndarray
    cost: float
    iterations: int
    converged: bool
    reason: str


def numeric_jacobian(fun: ResidualFn, p: np.ndarray, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference Jacobian of ``fun`` at ``p``, shape (n_residuals, n_params)."""
    p = np.asarray(p, dtype=float)
    cols = []
    for i in range(p.size):
        h = rel_step * max(abs(p[i]), 1.0)
        hi = p.copy()
        lo = p.copy()
        hi[i] += h
        lo[i] -= h
        cols.append((fun(hi) - fun(lo)) / (hi[i] - lo[i]))
    return np.column_stack(cols)


def levenberg_marquardt(
    fun: ResidualFn,
    p0,
    *,
    rel_step: float = 1e-6,
    max_iter: int = 200,
    xtol: float = 1e-10,
    ftol: float = 1e-14,
    lam0: float = 1e-3,
) -> LsqResult:
    """Minimise ``0.5 * sum(fun(p)**2)`` starting from ``p0``.

    Damping follows Nielsen's update rule with Marquardt's diagonal scaling.
    Convergence is declared when a trial step is below ``xtol`` relative to
    the parameter norm, or when both the actual and predicted relative cost
    reductions fall below ``ftol``. Running out of iterations returns the
    best point found with ``converged=False``.
    """
    p = np.array(p0, dtype=float)
    r = fun(p)
    if not np.all(np.isfinite(r)):
        raise ValueError("residuals are not finite at the starting point")
    cost = 0.5 * float(r @ r)
    J = numeric_jacobian(fun, p, rel_step)
    lam = lam0
    nu = 2.0
    reason = "max_iter"
    converged = False
    it = 0

    while it < max_iter:
        it += 1
        if cost == 0.0:
            converged, reason = True, "zero residual"
            break
        A = J.T @ J
        g = J.T @ r
        diag = np.maximum(np.diag(A), 1e-300)
        try:
            step = np.linalg.solve(A + lam * np.diag(diag), -g)
        except np.linalg.LinAlgError:
            lam *= nu
            nu *= 2.0
            continue

        p_new = p + step
        r_new = fun(p_new)
        small_step = np.linalg.norm(step) <= xtol * (np.linalg.norm(p) + xtol)
        if not np.all(np.isfinite(r_new)):
            lam *= nu
            nu *= 2.0
            if small_step:
                converged, reason = True, "xtol"
                break
            continue

        cost_new = 0.5 * float(r_new @ r_new)
        predicted = -(g @ step) - 0.5 * float(step @ A @ step)
        actual = cost - cost_new
        rho = actual / predicted if predicted > 0 else -1.0

        if rho > 0:
            p, r = p_new, r_new
            J = numeric_jacobian(fun, p, rel_step)
            lam *= max(1.0 / 3.0, 1.0 - (2.0 * rho - 1.0) ** 3)
            nu = 2.0
            f_stationary = actual <= ftol * cost and predicted <= ftol * cost
            cost = cost_new
            if small_step:
                converged, reason = True, "xtol"
                break
            if f_stationary:
                converged, reason = True, "ftol"
                break
        else:
            lam *= nu
            nu *= 2.0
            if small_step:
                converged, reason = True, "xtol"
                break

    log.debug("lm finished after %d iterations (%s), cost=%.3e", it, reason, cost)
    return LsqResult(p, r, J, cost, it, converged, reason)


def scaled_covariance(J: np.ndarray, residual: np.ndarray, rcond: float = 1e-12) -> np.ndarray:
    """Residual-variance-scaled ``(J^T J)^-1``.

    Raises ``np.linalg.LinAlgError`` when ``J`` is numerically rank deficient.
    """
    n, k = J.shape
    if n <= k:
        raise np.linalg.LinAlgError("not enough residuals for a covariance estimate")
    _, s, vt = np.linalg.svd(J, full_matrices=False)
    if s[-1] <= rcond * s[0]:
        raise np.linalg.LinAlgError("singular normal matrix")
    inv = (vt.T / s**2) @ vt
    s2 = float(residual @ residual) / (n - k)
    cov = s2 * inv
    return 0.5 * (cov + cov.T)
