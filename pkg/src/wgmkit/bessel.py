"""Integer-order Bessel functions J_n, I_n, K_n for real x > 0.

* J_n and I_n: Miller's downward recurrence from a start order well above
  both ``n`` and ``x``, normalised with ``J0 + 2 sum J_2k = 1`` and
  ``I0 + 2 sum I_k = exp(x)``.
* K_0, K_1: trapezoid rule on ``K_v(x) = int_0^inf exp(-x cosh t) cosh(v t) dt``,
  which converges exponentially in the step size; higher orders by upward
  recurrence (stable for K).

All functions broadcast over ``x`` and are accurate to a few ulp over the
range used by the mode solver (orders up to ~40, 1e-3 < x < 100).
"""

from __future__ import annotations

import math

import numpy as np

_RESCALE = 1e250


def _start_order(n_max: int, x_max: float) -> int:
    top = max(n_max, x_max, 1.0)
    n = int(top + math.sqrt(160.0 * top) + 12)
    return n + (n % 2)


def _miller(n_max: int, x, modified: bool):
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x < 0) or not np.all(np.isfinite(x)):
        raise ValueError("x must be finite and >= 0")
    shape = x.shape
    x = x.ravel()
    out = np.zeros((n_max + 1, x.size))
    pos = x > 0
    xp = x[pos]
    if xp.size:
        sign = 1.0 if modified else -1.0
        N = _start_order(n_max, float(xp.max()))
        b_next = np.zeros_like(xp)
        b = np.full_like(xp, 1e-30)
        vals = np.zeros((n_max + 1, xp.size))
        if modified:
            total = 2.0 * b.copy()
        else:
            total = 2.0 * b.copy() if N % 2 == 0 else np.zeros_like(xp)
        two_over_x = 2.0 / xp
        for k in range(N, 0, -1):
            b_prev = k * two_over_x * b + sign * b_next
            b_next, b = b, b_prev
            big = np.abs(b) > _RESCALE
            if big.any():
                b[big] /= _RESCALE
                b_next[big] /= _RESCALE
                vals[:, big] /= _RESCALE
                total[big] /= _RESCALE
            order = k - 1
            if order <= n_max:
                vals[order] = b
            if modified:
                total += b if order == 0 else 2.0 * b
            elif order % 2 == 0:
                total += b if order == 0 else 2.0 * b
        vals /= total
        if modified:
            vals *= np.exp(xp)
        out[:, pos] = vals
    out[0, ~pos] = 1.0
    return out.reshape((n_max + 1,) + shape)


def jn_all(n_max: int, x) -> np.ndarray:
    """J_0..J_{n_max} at ``x``; shape ``(n_max + 1,) + x.shape``."""
    return _miller(n_max, x, modified=False)


def in_all(n_max: int, x) -> np.ndarray:
    """I_0..I_{n_max} at ``x``; shape ``(n_max + 1,) + x.shape``."""
    return _miller(n_max, x, modified=True)


def jn(n: int, x):
    res = jn_all(n, x)[n]
    return res if np.ndim(x) else float(np.ravel(res)[0])


def jn_prime(n: int, x):
    """dJ_n/dx = (J_{n-1} - J_{n+1}) / 2, with J_{-1} = -J_1."""
    allj = jn_all(n + 1, x)
    lower = allj[n - 1] if n > 0 else -allj[1]
    res = 0.5 * (lower - allj[n + 1])
    return res if np.ndim(x) else float(np.ravel(res)[0])


def _k01_scaled(x: np.ndarray):
    """exp(x) K_0(x) and exp(x) K_1(x) by the trapezoid rule."""
    h = 0.05
    x_min = float(x.min())
    t_max = math.acosh(1.0 + 80.0 / x_min) + 1.0
    t = np.arange(0.0, t_max + h, h)[:, None]
    w = np.full(t.shape, h)
    w[0] = 0.5 * h
    e = np.exp(-x[None, :] * (np.cosh(t) - 1.0))
    k0 = np.sum(w * e, axis=0)
    k1 = np.sum(w * e * np.cosh(t), axis=0)
    return k0, k1


def kn_all(n_max: int, x) -> np.ndarray:
    """K_0..K_{n_max} at ``x > 0``; shape ``(n_max + 1,) + x.shape``."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if np.any(x <= 0) or not np.all(np.isfinite(x)):
        raise ValueError("K_n needs finite x > 0")
    shape = x.shape
    xf = x.ravel()
    k0, k1 = _k01_scaled(xf)
    scale = np.exp(-xf)
    out = np.empty((n_max + 1, xf.size))
    out[0] = k0 * scale
    if n_max >= 1:
        out[1] = k1 * scale
    with np.errstate(over="ignore"):
        for n in range(1, n_max):
            out[n + 1] = out[n - 1] + (2.0 * n / xf) * out[n]
    return out.reshape((n_max + 1,) + shape)


def kn(n: int, x):
    res = kn_all(n, x)[n]
    return res if np.ndim(x) else float(np.ravel(res)[0])


def kn_prime(n: int, x):
    """dK_n/dx = -(K_{n-1} + K_{n+1}) / 2, with K_{-1} = K_1."""
    allk = kn_all(n + 1, x)
    lower = allk[n - 1] if n > 0 else allk[1]
    res = -0.5 * (lower + allk[n + 1])
    return res if np.ndim(x) else float(np.ravel(res)[0])


def kn_log_derivative(n: int, x):
    """``x K_n'(x) / K_n(x)`` without overflow, via the ratio recurrence.

    Tends to ``-n`` as ``x -> 0`` for ``n >= 1``.
    """
    x = np.asarray(x, dtype=float)
    xf = np.atleast_1d(x).ravel()
    res = np.empty_like(xf)
    zero = xf == 0
    res[zero] = -float(n)
    xp = xf[~zero]
    if xp.size:
        k0, k1 = _k01_scaled(xp)
        if n == 0:
            res[~zero] = -xp * k1 / k0
        else:
            r = k1 / k0  # K_1 / K_0
            for k in range(1, n):
                r = 1.0 / r + 2.0 * k / xp  # K_{k+1} / K_k
            res[~zero] = -n - xp / r
    res = res.reshape(np.shape(x))
    return res if np.ndim(x) else float(np.ravel(res)[0])
