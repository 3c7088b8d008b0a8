"""Fano lineshape model, synthetic traces, and damped least-squares fitting.

The lineshape is

    F(f) = B + A * (q + eps)**2 / (1 + eps**2),    eps = 2 (f - f0) / gamma

so that ``f0 / gamma`` is the loaded Q independent of the asymmetry ``q``.
Fits are performed on the response magnitude. Standard errors are the plain
covariance-derived errors (residual-variance scaled), not errors rescaled to
unit SNR.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.ndimage import uniform_filter1d

from .errors import DegenerateFitError, NoResonanceError, ValidationError
from .lsq import levenberg_marquardt, scaled_covariance

log = logging.getLogger(__name__)

PARAM_NAMES = ("f0", "gamma", "q_asym", "amp", "baseline")

#: Value returned by :func:`snr_estimate` when the residual vanishes.
SNR_CAP = 1e8

MIN_POINTS = 8


@dataclass(frozen=True)
class TraceMeta:
    source_dbm: Optional[float] = None
    temperature_mk: Optional[float] = None
    mode: Optional[str] = None


@dataclass(frozen=True)
class FrequencyTrace:
    """A sampled transmission sweep.

    ``response`` is complex; magnitude-only traces carry a zero imaginary part
    and ``complex_data=False``, in which case the real part is used as the
    magnitude (so additive noise stays unbiased).
    """

    freq: np.ndarray
    response: np.ndarray
    meta: TraceMeta = field(default_factory=TraceMeta)
    complex_data: bool = False

    def __post_init__(self):
        f = np.array(self.freq, dtype=float)
        r = np.array(self.response, dtype=complex)
        if f.ndim != 1 or r.shape != f.shape:
            raise ValidationError("freq and response must be 1-D arrays of equal length")
        if f.size < MIN_POINTS:
            raise ValidationError(f"a trace needs at least {MIN_POINTS} points, got {f.size}")
        if not np.all(np.isfinite(f)) or np.any(f <= 0):
            raise ValidationError("frequencies must be finite and positive")
        bad = np.nonzero(np.diff(f) <= 0)[0]
        if bad.size:
            raise ValidationError(f"frequencies not strictly increasing at index {bad[0] + 1}")
        if not np.all(np.isfinite(r)):
            raise ValidationError("response values must be finite")
        f.setflags(write=False)
        r.setflags(write=False)
        object.__setattr__(self, "freq", f)
        object.__setattr__(self, "response", r)

    def __len__(self) -> int:
        return self.freq.size

    @property
    def magnitude(self) -> np.ndarray:
        if self.complex_data:
            return np.abs(self.response)
        return self.response.real


@dataclass(frozen=True)
class FanoParams:
    f0: float
    gamma: float
    q_asym: float
    amp: float
    baseline: float

    def __post_init__(self):
        vals = self.as_array()
        if not np.all(np.isfinite(vals)):
            raise ValidationError(f"non-finite Fano parameter in {self}")
        if self.f0 <= 0 or self.gamma <= 0:
            raise ValidationError("f0 and gamma must be positive")
        if self.amp < 0:
            raise ValidationError("amp must be non-negative")

    @property
    def q_loaded(self) -> float:
        return self.f0 / self.gamma

    def as_array(self) -> np.ndarray:
        return np.array([self.f0, self.gamma, self.q_asym, self.amp, self.baseline], dtype=float)

    def to_dict(self) -> dict:
        return {k: float(getattr(self, k)) for k in PARAM_NAMES}

    @classmethod
    def from_dict(cls, d: dict) -> "FanoParams":
        try:
            return cls(**{k: float(d[k]) for k in PARAM_NAMES})
        except KeyError as exc:
            raise ValidationError(f"missing Fano parameter {exc}") from None


@dataclass(frozen=True)
class FitResult:
    params: FanoParams
    std_errors: dict
    covariance: np.ndarray
    residual_rms: float
    snr: float
    converged: bool
    iterations: int

    @property
    def q_loaded(self) -> float:
        return self.params.q_loaded

    @property
    def q_sigma(self) -> float:
        """Standard error of f0/gamma propagated from the (f0, gamma) covariance."""
        f0, g = self.params.f0, self.params.gamma
        c = self.covariance
        var = (c[0, 0] / f0**2 + c[1, 1] / g**2 - 2.0 * c[0, 1] / (f0 * g)) * self.q_loaded**2
        return math.sqrt(max(var, 0.0))

    def to_dict(self) -> dict:
        return {
            "params": self.params.to_dict(),
            "std_errors": {k: float(v) for k, v in self.std_errors.items()},
            "covariance": [[float(v) for v in row] for row in self.covariance],
            "residual_rms": float(self.residual_rms),
            "snr": float(self.snr),
            "converged": bool(self.converged),
            "iterations": int(self.iterations),
            "q_loaded": float(self.q_loaded),
            "q_sigma": float(self.q_sigma),
        }


def fano_eval(params: FanoParams, f):
    """Evaluate the Fano lineshape at frequency (or array of frequencies) ``f``."""
    f = np.asarray(f, dtype=float)
    if not np.all(np.isfinite(f)):
        raise ValidationError("frequency must be finite")
    eps = 2.0 * (f - params.f0) / params.gamma
    val = params.baseline + params.amp * (params.q_asym + eps) ** 2 / (1.0 + eps**2)
    return val if val.ndim else float(val)


def synth_trace(
    params: FanoParams,
    n_points: int,
    span: float,
    snr: float,
    seed: int,
    meta: Optional[TraceMeta] = None,
) -> FrequencyTrace:
    """Uniform grid centred on ``params.f0`` with additive Gaussian noise of s.d. ``amp/snr``."""
    if n_points < MIN_POINTS:
        raise ValidationError(f"n_points must be >= {MIN_POINTS}")
    if not span > 0 or not math.isfinite(span):
        raise ValidationError("span must be positive and finite")
    if not snr > 0:
        raise ValidationError("snr must be positive (or inf)")
    f = np.linspace(params.f0 - 0.5 * span, params.f0 + 0.5 * span, n_points)
    y = fano_eval(params, f)
    if math.isfinite(snr):
        rng = np.random.default_rng(seed)
        y = y + rng.normal(0.0, params.amp / snr, n_points)
    return FrequencyTrace(f, y.astype(complex), meta or TraceMeta(), complex_data=False)


def _noise_sigma(y: np.ndarray) -> float:
    d = np.diff(y)
    return 1.4826 * float(np.median(np.abs(d - np.median(d)))) / math.sqrt(2.0)


def _linear_coeffs(f, y, f0, gamma):
    """Least-squares (c0, c1, c2) of y ~ c0 + c1/(1+e^2) + c2*e/(1+e^2), batched over (f0, gamma)."""
    f0 = np.atleast_1d(np.asarray(f0, dtype=float))[:, None]
    gamma = np.atleast_1d(np.asarray(gamma, dtype=float))[:, None]
    eps = 2.0 * (f[None, :] - f0) / gamma
    lor = 1.0 / (1.0 + eps**2)
    dis = eps * lor
    n = float(f.size)
    s_l, s_d = lor.sum(1), dis.sum(1)
    XtX = np.empty((eps.shape[0], 3, 3))
    XtX[:, 0, 0] = n
    XtX[:, 0, 1] = XtX[:, 1, 0] = s_l
    XtX[:, 0, 2] = XtX[:, 2, 0] = s_d
    XtX[:, 1, 1] = (lor * lor).sum(1)
    XtX[:, 1, 2] = XtX[:, 2, 1] = (lor * dis).sum(1)
    XtX[:, 2, 2] = (dis * dis).sum(1)
    Xty = np.stack([np.full(eps.shape[0], y.sum()), lor @ y, dis @ y], axis=1)
    c = np.linalg.solve(XtX, Xty[..., None])[..., 0]
    # rss = y.y - c.Xty at the least-squares solution
    rss = float(y @ y) - np.einsum("ki,ki->k", c, Xty)
    return c, rss


def _coeffs_to_fano(c0, c1, c2, sign_hint=1.0):
    """Map the linear coefficients back to (amp, q, baseline) with amp >= 0."""
    amp = 0.5 * (-c1 + math.hypot(c1, c2))
    scale = max(abs(c0), abs(c1), abs(c2), 1e-300)
    if amp <= 1e-9 * scale:
        # pure Lorentzian peak is the |q| -> inf limit; cap it
        amp = 1e-9 * scale
    q2 = max(1.0 + c1 / amp, 0.0)
    sign = math.copysign(1.0, c2) if c2 != 0.0 else sign_hint
    return amp, sign * math.sqrt(q2), c0 - amp


def estimate_initial(trace: FrequencyTrace) -> FanoParams:
    """Heuristic Fano seed.

    The far-off-resonance level is the median of the outer 10% of samples; f0
    sits at the extremal (smoothed) deviation from it; gamma is the full width
    at half that deviation; the sign of q follows the skew of the deviation
    about f0. Amplitude, |q| and baseline come from a linear projection at the
    estimated (f0, gamma).
    """
    f = trace.freq
    y = trace.magnitude
    n = f.size
    k = max(1, int(round(0.05 * n)))
    far = float(np.median(np.concatenate([y[:k], y[-k:]])))
    d = y - far

    sigma = _noise_sigma(y)
    peak_dev = float(np.max(np.abs(d)))
    window, d_s = 1, d
    if sigma > 1e-3 * peak_dev:
        # pick the boxcar width that maximises peak significance
        best = peak_dev / sigma
        w = 3
        while w <= max(3, n // 8):
            cand = uniform_filter1d(d, w, mode="nearest")
            z = float(np.max(np.abs(cand))) * math.sqrt(w) / sigma
            if z > best:
                best, window, d_s = z, w, cand
            w = 2 * w + 1
    edge = min(window // 2, (n - 1) // 2)
    i0 = edge + int(np.argmax(np.abs(d_s[edge:n - edge])))
    dev = float(d_s[i0])
    floor = 2.0 * sigma / math.sqrt(window)
    if abs(dev) <= max(floor, 1e-12 * max(float(np.max(np.abs(y))), 1e-300)):
        raise NoResonanceError("no resonance found")

    half = 0.5 * abs(dev)
    sgn = math.copysign(1.0, dev)

    def crossing(direction):
        i = i0
        while 0 <= i + direction < n and sgn * d_s[i + direction] >= half:
            i += direction
        j = i + direction
        if not 0 <= j < n:
            return f[i]
        # linear interpolation between the last inside and first outside sample
        a, b = sgn * d_s[i] - half, sgn * d_s[j] - half
        t = a / (a - b) if a != b else 0.0
        return f[i] + t * (f[j] - f[i])

    width = crossing(1) - crossing(-1)
    gamma = max(width, float(np.min(np.diff(f))))
    f0 = float(f[i0])

    near = np.abs(f - f0) <= 3.0 * gamma
    skew = float(np.sum(d_s[near] * (f[near] - f0)))
    sign_q = 1.0 if skew >= 0 else -1.0

    c, _ = _linear_coeffs(f, y, f0, gamma)
    c0, c1, c2 = (float(v) for v in c[0])
    if all(math.isfinite(v) for v in (c0, c1, c2)):
        amp, q, base = _coeffs_to_fano(c0, c1, c2, sign_q)
    else:
        amp, q, base = abs(dev), 0.5 * sign_q, far - abs(dev)
    return FanoParams(f0=f0, gamma=gamma, q_asym=q, amp=amp, baseline=base)


def _profiled_best(f, y, f0s, gammas, sign_hint):
    F0, G = np.meshgrid(f0s, gammas, indexing="ij")
    c, rss = _linear_coeffs(f, y, F0.ravel(), G.ravel())
    rss = np.where(np.isfinite(rss), rss, np.inf)
    best = int(np.argmin(rss))
    amp, q, base = _coeffs_to_fano(*(float(v) for v in c[best]), sign_hint)
    return FanoParams(float(F0.ravel()[best]), float(G.ravel()[best]), q, amp, base), float(rss[best])


def _refine_seed(f, y, seed: FanoParams) -> FanoParams:
    """Profiled grid search for a starting point.

    Two candidates compete: a local grid around the heuristic ``seed`` and a
    coarse grid over the whole trace (guards against seeds locked onto noise
    spikes). The winner is refined once more on a local grid.
    """
    sign = math.copysign(1.0, seed.q_asym)
    span = f[-1] - f[0]
    df = span / (f.size - 1)
    # widths below two samples are unresolved and only ever fit noise spikes
    local = lambda p: _profiled_best(
        f, y,
        p.f0 + p.gamma * np.linspace(-3.0, 3.0, 25),
        np.maximum(p.gamma * np.logspace(-math.log10(3.0), math.log10(3.0), 13), 2.0 * df),
        sign,
    )
    cand, rss = local(seed)
    glob, rss_g = _profiled_best(
        f, y,
        np.linspace(f[0] + 0.05 * span, f[-1] - 0.05 * span, 64),
        np.geomspace(3.0 * df, span / 3.0, 12),
        sign,
    )
    if rss_g < rss:
        cand, _ = local(glob)
    return cand


def fit_fano(
    trace: FrequencyTrace,
    guess: Optional[FanoParams] = None,
    *,
    max_iter: int = 200,
    rel_step: float = 1e-6,
    xtol: float = 1e-10,
) -> FitResult:
    """Fit the Fano lineshape to the trace magnitude.

    Without a ``guess`` the seed comes from :func:`estimate_initial`, refined
    by a profiled grid search. Internally frequencies are measured from the
    seed f0 in units of the seed gamma and the response is normalised by its
    peak magnitude, so all fitted parameters are of order unity.

    Raises :class:`DegenerateFitError` when the normal matrix is singular at
    the solution. Non-convergence returns a result with ``converged=False``.
    """
    f = trace.freq
    y = trace.magnitude
    if guess is None:
        guess = _refine_seed(f, y, estimate_initial(trace))

    fref, g = guess.f0, guess.gamma
    ys = float(np.max(np.abs(y))) or 1.0
    x = (f - fref) / g
    yn = y / ys

    def residual(p):
        u, w, q, a, b = p
        eps = 2.0 * (x - u) / w
        return b + a * (q + eps) ** 2 / (1.0 + eps**2) - yn

    p0 = np.array([0.0, 1.0, guess.q_asym, guess.amp / ys, guess.baseline / ys])
    res = levenberg_marquardt(residual, p0, rel_step=rel_step, max_iter=max_iter, xtol=xtol)
    iterations = res.iterations

    p = res.x.copy()
    remapped = False
    if p[1] < 0:
        # eps -> -eps is equivalent to q -> -q
        p[1], p[2] = -p[1], -p[2]
        remapped = True
    if p[3] < 0 and p[2] != 0:
        # B + A(q+e)^2/(1+e^2) with A < 0 equals the same curve with
        # A' = |A| q^2, q' = -1/q, B' = B - |A| (1 + q^2)
        a, q, b = -p[3], p[2], p[4]
        p[2], p[3], p[4] = -1.0 / q, a * q * q, b - a * (1.0 + q * q)
        remapped = True
    if remapped:
        res = levenberg_marquardt(residual, p, rel_step=rel_step, max_iter=max_iter, xtol=xtol)
        iterations += res.iterations
        p = res.x

    try:
        cov_n = scaled_covariance(res.jac, res.residual)
    except np.linalg.LinAlgError as exc:
        raise DegenerateFitError(f"degenerate fit: {exc}") from None

    u, w, q, a, b = p
    D = np.array([g, g, 1.0, ys, ys])
    cov = cov_n * np.outer(D, D)
    try:
        params = FanoParams(f0=fref + u * g, gamma=w * g, q_asym=q, amp=a * ys, baseline=b * ys)
    except ValidationError as exc:
        raise DegenerateFitError(f"degenerate fit: {exc}") from None

    std = np.sqrt(np.maximum(np.diag(cov), 0.0))
    resid = y - fano_eval(params, f)
    rms = float(np.sqrt(np.mean(resid**2)))
    if not res.converged:
        log.warning("Fano fit did not converge after %d iterations", iterations)
    return FitResult(
        params=params,
        std_errors=dict(zip(PARAM_NAMES, (float(s) for s in std))),
        covariance=cov,
        residual_rms=rms,
        snr=_snr(params.amp, rms),
        converged=res.converged,
        iterations=iterations,
    )


def _snr(amp: float, rms: float) -> float:
    if rms <= 0 or amp >= SNR_CAP * rms:
        return SNR_CAP
    return amp / rms


def snr_estimate(trace: FrequencyTrace, fit: FitResult) -> float:
    """Fitted amplitude over residual RMS, capped at :data:`SNR_CAP`."""
    resid = trace.magnitude - fano_eval(fit.params, trace.freq)
    return _snr(fit.params.amp, float(np.sqrt(np.mean(resid**2))))
