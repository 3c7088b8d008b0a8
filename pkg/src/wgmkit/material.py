"""Loss tangent, paramagnetic susceptibility and ESR saturation from power sweeps."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .errors import UnidentifiableError, ValidationError
from .lineshape import FitResult, FrequencyTrace, fit_fano
from .lsq import levenberg_marquardt
from .mode_solver import ModeSolution, field_amplitudes
from .power_chain import PowerChain, chain_apply, dbm_to_watts, intracavity_state

log = logging.getLogger(__name__)


def chi_prime(p_m_perp: float, frac_shift: float) -> float:
    """Real susceptibility from a fractional frequency shift: ``(2 / p_m_perp) * frac_shift``."""
    if not p_m_perp > 0:
        raise ValidationError("p_m_perp must be positive")
    return 2.0 / p_m_perp * frac_shift


def delta_chi_double_prime(p_m_perp: float, inv_q_low: float, inv_q_high: float) -> float:
    """Change in imaginary susceptibility from ``Delta(1/Q) = p_m_perp * Delta chi''``.

    Positive when the low-power state is the lossier one.
    """
    if not p_m_perp > 0:
        raise ValidationError("p_m_perp must be positive")
    if inv_q_low < 0 or inv_q_high < 0:
        raise ValidationError("1/Q values must be non-negative")
    return (inv_q_low - inv_q_high) / p_m_perp


def unloaded_q(q_loaded: float, beta1: float = 0.0, beta2: float = 0.0) -> float:
    return q_loaded * (1.0 + beta1 + beta2)


def loss_tangent(q_loaded: float, beta1: float = 0.0, beta2: float = 0.0, p_e_total: float = 1.0) -> float:
    """Upper bound on tan(delta), attributing all unloaded loss to the dielectric."""
    if not q_loaded > 0:
        raise ValidationError("q_loaded must be positive")
    if beta1 < 0 or beta2 < 0:
        raise ValidationError("coupling coefficients must be non-negative")
    if not 0 < p_e_total <= 1:
        raise ValidationError("p_e_total must lie in (0, 1]")
    return 1.0 / (unloaded_q(q_loaded, beta1, beta2) * p_e_total)


# -- saturation ---------------------------------------------------------------


@dataclass(frozen=True)
class SaturationFit:
    x_unsat: float
    x_sat: float
    p_c: float
    residual_rms: float
    converged: bool = True

    def __call__(self, power):
        return saturation_model(power, self.x_unsat, self.x_sat, self.p_c)

    def saturated_fraction(self, power) -> float:
        """How far the drop from x_unsat to x_sat has progressed at ``power`` (0..1)."""
        p = np.asarray(power, dtype=float)
        return (p / self.p_c) / (1.0 + p / self.p_c)

    def to_dict(self) -> dict:
        return {
            "x_unsat": self.x_unsat,
            "x_sat": self.x_sat,
            "p_c_w": self.p_c,
            "residual_rms": self.residual_rms,
            "converged": self.converged,
        }


def saturation_model(power, x_unsat, x_sat, p_c):
    power = np.asarray(power, dtype=float)
    return x_sat + (x_unsat - x_sat) / (1.0 + power / p_c)


def fit_saturation(points: Sequence[tuple]) -> SaturationFit:
    """Least-squares fit of ``x(P) = x_sat + (x_unsat - x_sat) / (1 + P / p_c)``.

    Needs at least four points spanning two decades of power. The saturation
    power is fitted on a log scale; the two asymptotes enter linearly, so the
    start point comes from a profiled scan over p_c.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 4:
        raise ValidationError("need at least 4 (power, x) points")
    P, x = pts[:, 0], pts[:, 1]
    if np.any(P <= 0) or not np.all(np.isfinite(pts)):
        raise ValidationError("powers must be positive and values finite")
    if math.log10(P.max() / P.min()) < 2.0:
        raise ValidationError("powers must span at least two decades")
    scale = float(np.max(np.abs(x)))
    if scale == 0 or np.ptp(x) <= 1e-12 * scale:
        raise UnidentifiableError("unidentifiable saturation: values are constant")

    xn = x / scale
    lp = np.log(P)
    grid = np.linspace(lp.min() - 1.0, lp.max() + 1.0, 200)
    best = None
    for lpc in grid:
        g = 1.0 / (1.0 + np.exp(lp - lpc))
        X = np.column_stack([g, 1.0 - g])  # coefficients (x_unsat, x_sat)
        coef, *_ = np.linalg.lstsq(X, xn, rcond=None)
        rss = float(np.sum((X @ coef - xn) ** 2))
        if best is None or rss < best[0]:
            best = (rss, coef, lpc)
    _, (xu0, xs0), lpc0 = best

    def residual(p):
        xu, xs, lpc = p
        return xs + (xu - xs) / (1.0 + np.exp(lp - lpc)) - xn

    res = levenberg_marquardt(residual, np.array([xu0, xs0, lpc0]))
    xu, xs, lpc = res.x
    rms = float(np.sqrt(np.mean(res.residual**2))) * scale
    return SaturationFit(xu * scale, xs * scale, float(math.exp(lpc)), rms, res.converged)


# -- power sweeps ---------------------------------------------------------------


@dataclass(frozen=True)
class SweepRow:
    p_source_dbm: float
    p_res_dbm: float
    q: float
    q_sigma: float
    f0_hz: float
    f0_sigma_hz: float
    frac_shift: float
    chi_prime: float
    tan_delta: float
    tan_delta_mag: float
    e_peak: float
    h_peak: float
    n_photon: float
    converged: bool
    snr: float
    source_index: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


CSV_COLUMNS = (
    "p_source_dbm", "p_res_dbm", "q", "q_sigma", "f0_hz", "f0_sigma_hz",
    "frac_shift", "chi_prime", "tan_delta", "e_peak", "h_peak", "n_photon",
)


@dataclass(frozen=True)
class SweepReport:
    rows: tuple
    reference_f0: float
    reference: str
    mode: dict
    chain: dict
    fits: tuple = field(default=(), repr=False)

    def column(self, name: str) -> np.ndarray:
        return np.array([getattr(r, name) for r in self.rows], dtype=float)

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "reference_f0_hz": self.reference_f0,
            "reference": self.reference,
            "mode": self.mode,
            "chain": self.chain,
            "columns": list(CSV_COLUMNS),
        }


def analyze_power_sweep(
    traces: Sequence[FrequencyTrace],
    chain: PowerChain,
    mode: ModeSolution,
    reference_f0: Optional[float] = None,
) -> SweepReport:
    """Fit every trace and tabulate Q, shift, susceptibility, loss tangent and fields per power.

    Frequency shifts are taken against the highest-power (most saturated)
    trace unless ``reference_f0`` is given. The incident power passed to the
    stored-energy calculation is the chain output at the resonator. Rows
    whose fit did not converge are kept and flagged.
    """
    traces = list(traces)
    if len(traces) < 2:
        raise ValidationError("a power sweep needs at least two traces")
    labels = {t.meta.mode for t in traces}
    if len(labels) > 1:
        raise ValidationError(f"traces mix mode labels: {sorted(map(str, labels))}")
    for i, t in enumerate(traces):
        if t.meta.source_dbm is None:
            raise ValidationError(f"trace {i} has no source power metadata")

    order = sorted(range(len(traces)), key=lambda i: (traces[i].meta.source_dbm, i))
    fits: list[FitResult] = [fit_fano(traces[i]) for i in order]

    if reference_f0 is None:
        f_ref = fits[-1].params.f0
        ref_note = "highest-power trace"
    else:
        f_ref = float(reference_f0)
        ref_note = "user-supplied"

    rows = []
    for i, fit in zip(order, fits):
        t = traces[i]
        p_res = chain_apply(t.meta.source_dbm, chain)
        q = fit.q_loaded
        f0 = fit.params.f0
        shift = 0.0 if f0 == f_ref else (f0 - f_ref) / f_ref
        state = intracavity_state(dbm_to_watts(p_res), chain, q, f0)
        e_pk, h_pk = field_amplitudes(mode, state.energy)
        q0 = q * (1.0 + chain.beta1 + chain.beta2)
        rows.append(
            SweepRow(
                p_source_dbm=float(t.meta.source_dbm),
                p_res_dbm=p_res,
                q=q,
                q_sigma=fit.q_sigma,
                f0_hz=f0,
                f0_sigma_hz=fit.std_errors["f0"],
                frac_shift=shift,
                chi_prime=chi_prime(mode.p_m_perp, shift),
                tan_delta=loss_tangent(q, chain.beta1, chain.beta2, mode.p_e_total),
                tan_delta_mag=1.0 / (q0 * mode.p_m_perp),
                e_peak=e_pk,
                h_peak=h_pk,
                n_photon=state.photon_number,
                converged=fit.converged,
                snr=fit.snr,
                source_index=i,
            )
        )
        if not fit.converged:
            log.warning("trace %d (%.1f dBm): fit did not converge; row flagged", i, t.meta.source_dbm)

    return SweepReport(
        rows=tuple(rows),
        reference_f0=f_ref,
        reference=ref_note,
        mode=mode.to_dict(),
        chain=chain.to_dict(),
        fits=tuple(fits),
    )


@dataclass(frozen=True)
class MaterialResult:
    tan_delta: float
    chi_prime: float
    chi_double_prime_delta: float
    notes: dict

    def to_dict(self) -> dict:
        return {
            "tan_delta": self.tan_delta,
            "chi_prime": self.chi_prime,
            "chi_double_prime_delta": self.chi_double_prime_delta,
            "notes": dict(self.notes),
        }


def summarize_material(report: SweepReport, p_m_perp: float) -> MaterialResult:
    """Headline numbers from a sweep.

    Both loss-tangent bounds are kept: the low-power one (ESR unsaturated,
    reported as ``tan_delta``) and the high-power one (in ``notes``).
    """
    low, high = report.rows[0], report.rows[-1]
    dchi2 = delta_chi_double_prime(p_m_perp, 1.0 / low.q, 1.0 / high.q)
    notes = {
        "tan_delta": f"upper bound 1/(Q0 p_e) at the lowest power ({low.p_res_dbm:.2f} dBm at resonator)",
        "tan_delta_high_power": high.tan_delta,
        "chi_prime": f"(2/p_m_perp) * shift of the lowest-power row against the {report.reference} reference",
        "chi_double_prime_delta": "(1/Q_low - 1/Q_high)/p_m_perp between the lowest- and highest-power rows",
    }
    return MaterialResult(low.tan_delta, low.chi_prime, dchi2, notes)
