"""Synthetic power sweeps with an injected paramagnetic saturation.

Used by the golden fixtures, the end-to-end tests and the experiment
scripts. The injected susceptibilities follow the saturation model in
power at the resonator:

    chi'(P)  = sat(P; chi1_unsat, chi1_sat, p_c)      ->  f0 = f_bare (1 + p_m chi' / 2)
    chi''(P) = sat(P; chi2_unsat, 0, p_c)             ->  1/Q0 = 1/Q_int + p_m chi''

Trace SNR falls by 10 dB for every 40 dB drop in power so that low-power
fits carry the larger error bars seen in real sweeps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lineshape import FanoParams, FrequencyTrace, TraceMeta, synth_trace
from .material import saturation_model
from .power_chain import PowerChain, chain_apply, dbm_to_watts


@dataclass(frozen=True)
class SweepTruth:
    f_bare: float = 13.869e9
    q_int: float = 5e8
    chi1_unsat: float = 5e-9
    chi1_sat: float = 1e-9
    chi2_unsat: float = 8e-9
    p_c: float = 1e-12  # W at the resonator (-90 dBm)
    chi_noise: float = 0.05  # multiplicative scatter on the injected chi'
    q_asym: float = 0.1
    amp: float = 1.0
    baseline: float = 0.01
    snr_max: float = 300.0
    points: int = 1001
    span_widths: float = 10.0
    mode_label: str = "WGH20"


@dataclass(frozen=True)
class SweepPoint:
    source_dbm: float
    p_res_w: float
    chi1: float
    chi2: float
    params: FanoParams
    snr: float


def sweep_points(source_dbm, chain: PowerChain, p_m_perp: float, truth: SweepTruth = SweepTruth(), seed: int = 0):
    """Injected per-trace truth for each source power (in the given order)."""
    rng = np.random.default_rng(seed)
    src = [float(s) for s in source_dbm]
    p_res_dbm = np.array([chain_apply(s, chain) for s in src])
    p_res = np.array([dbm_to_watts(p) for p in p_res_dbm])
    chi1 = saturation_model(p_res, truth.chi1_unsat, truth.chi1_sat, truth.p_c)
    chi1 = chi1 * (1.0 + truth.chi_noise * rng.standard_normal(len(src)))
    chi2 = saturation_model(p_res, truth.chi2_unsat, 0.0, truth.p_c)
    top = p_res_dbm.max()
    out = []
    for s, p, c1, c2, pdbm in zip(src, p_res, chi1, chi2, p_res_dbm):
        f0 = truth.f_bare * (1.0 + 0.5 * p_m_perp * c1)
        q0 = 1.0 / (1.0 / truth.q_int + p_m_perp * c2)
        q_l = q0 / (1.0 + chain.beta1 + chain.beta2)
        params = FanoParams(f0, f0 / q_l, truth.q_asym, truth.amp, truth.baseline)
        snr = truth.snr_max * 10.0 ** ((pdbm - top) / 40.0)
        out.append(SweepPoint(s, float(p), float(c1), float(c2), params, float(snr)))
    return out


def synth_sweep(source_dbm, chain: PowerChain, p_m_perp: float, truth: SweepTruth = SweepTruth(), seed: int = 0):
    """Return ``(traces, points)`` for a synthetic sweep; trace i uses seed ``seed + 1 + i``."""
    pts = sweep_points(source_dbm, chain, p_m_perp, truth, seed)
    traces: list[FrequencyTrace] = []
    for i, pt in enumerate(pts):
        meta = TraceMeta(pt.source_dbm, 27.0, truth.mode_label)
        span = truth.span_widths * pt.params.gamma
        traces.append(synth_trace(pt.params, truth.points, span, pt.snr, seed + 1 + i, meta))
    return traces, pts
