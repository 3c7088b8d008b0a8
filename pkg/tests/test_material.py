import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy.stats import spearmanr

from wgmkit.errors import UnidentifiableError, ValidationError
from wgmkit.lineshape import FanoParams, TraceMeta, synth_trace
from wgmkit.material import (
    CSV_COLUMNS,
    analyze_power_sweep,
    chi_prime,
    delta_chi_double_prime,
    fit_saturation,
    loss_tangent,
    saturation_model,
    summarize_material,
)
from wgmkit.power_chain import dbm_to_watts
from wgmkit.synthetic import SweepTruth


def test_chi_prime_examples():
    assert chi_prime(0.002, 1e-12) == 1e-9
    assert chi_prime(0.37, 0.0) == 0.0
    with pytest.raises(ValidationError):
        chi_prime(0.0, 1e-12)


@given(st.floats(1e-4, 1), st.floats(-1e-6, 1e-6), st.floats(0.1, 10))
def test_chi_prime_linearity(p, shift, k):
    assert chi_prime(p, k * shift) == pytest.approx(k * chi_prime(p, shift), rel=1e-14, abs=1e-300)
    assert chi_prime(p / k, shift) == pytest.approx(k * chi_prime(p, shift), rel=1e-14, abs=1e-300)
    assert chi_prime(p, -shift) == -chi_prime(p, shift)


def test_delta_chi_double_prime():
    assert delta_chi_double_prime(0.002, 1 / 1e8, 1 / 5e8) == pytest.approx(4e-6, rel=1e-12)
    assert delta_chi_double_prime(0.3, 2e-9, 2e-9) == 0.0
    for drop in (2.0, 5.0, 10.0):
        assert delta_chi_double_prime(0.01, drop / 5e8, 1 / 5e8) > 0
    with pytest.raises(ValidationError):
        delta_chi_double_prime(-1.0, 1e-8, 1e-9)
    with pytest.raises(ValidationError):
        delta_chi_double_prime(0.1, -1e-8, 1e-9)


def test_loss_tangent_examples():
    assert loss_tangent(5e8) == pytest.approx(2e-9, rel=1e-15)
    assert loss_tangent(5e7) == pytest.approx(2e-8, rel=1e-15)
    assert loss_tangent(3e8, p_e_total=0.98) == pytest.approx(3.4e-9, rel=1e-3)
    # Q0 = Q_L (1 + b1 + b2)
    assert loss_tangent(5e8 / 1.02, beta1=0.02) == pytest.approx(2e-9, rel=1e-14)
    for kw in ({"q_loaded": 0.0}, {"q_loaded": 1e8, "p_e_total": 0.0}, {"q_loaded": 1e8, "p_e_total": 1.5},
               {"q_loaded": 1e8, "beta1": -1.0}):
        with pytest.raises(ValidationError):
            loss_tangent(**kw)


@given(st.floats(1e6, 1e10), st.floats(0.05, 1.0), st.floats(1.01, 10))
def test_loss_tangent_monotonic(q, pe, k):
    assert loss_tangent(q * k, p_e_total=pe) < loss_tangent(q, p_e_total=pe)
    assert loss_tangent(q, p_e_total=pe / k) > loss_tangent(q, p_e_total=pe)


P = np.logspace(-15, -7, 17)


def test_saturation_noiseless():
    x = saturation_model(P, 5e-9, 1e-9, 1e-12)
    fit = fit_saturation(list(zip(P, x)))
    assert fit.x_unsat == pytest.approx(5e-9, rel=1e-6)
    assert fit.x_sat == pytest.approx(1e-9, rel=1e-6)
    assert fit.p_c == pytest.approx(1e-12, rel=1e-6)
    assert fit(1e-12) == pytest.approx(3e-9, rel=1e-6)


def test_saturation_noisy_typical():
    # coverage over seeds rather than one realisation: 5% noise, 4 points per decade
    # (measured coverage is ~97% over 200 seeds)
    pw = np.logspace(-15, -7, 33)
    ok = 0
    for seed in range(20):
        rng = np.random.default_rng(seed)
        x = saturation_model(pw, 5e-9, 1e-9, 1e-12) * (1 + 0.05 * rng.standard_normal(pw.size))
        f = fit_saturation(list(zip(pw, x)))
        ok += max(abs(f.x_unsat / 5e-9 - 1), abs(f.x_sat / 1e-9 - 1), abs(f.p_c / 1e-12 - 1)) < 0.2
    assert ok >= 18


def test_saturation_onset_shape():
    fit = fit_saturation(list(zip(P, saturation_model(P, 5e-9, 1e-9, 1e-12))))
    assert fit.saturated_fraction(dbm_to_watts(-60.0)) >= 0.9
    assert 0.3 < fit.saturated_fraction(dbm_to_watts(-90.0)) < 0.7


def test_saturation_errors():
    with pytest.raises(UnidentifiableError):
        fit_saturation([(p, 3e-9) for p in P])
    with pytest.raises(ValidationError):
        fit_saturation([(1e-12, 1.0), (2e-12, 0.9), (3e-12, 0.8), (5e-12, 0.7)])
    with pytest.raises(ValidationError):
        fit_saturation([(1e-12, 1.0), (1e-9, 0.2), (1e-8, 0.1)])


# -- sweeps ------------------------------------------------------------------


@pytest.fixture(scope="module")
def report(sweep12, wgh20):
    chain, traces, _ = sweep12
    return analyze_power_sweep(traces, chain, wgh20)


def test_report_structure(report, sweep12):
    _, traces, _ = sweep12
    assert len(report.rows) == len(traces)
    p = report.column("p_source_dbm")
    assert np.all(np.diff(p) > 0)
    assert report.rows[-1].frac_shift == 0.0
    assert report.reference == "highest-power trace"
    assert sorted(r.source_index for r in report.rows) == list(range(len(traces)))
    assert all(r.converged for r in report.rows)


def test_report_order_independent(sweep12, wgh20, report):
    chain, traces, _ = sweep12
    rev = analyze_power_sweep(traces[::-1], chain, wgh20)
    np.testing.assert_array_equal(rev.column("q"), report.column("q"))


def test_report_recovers_injection(sweep12, wgh20):
    chain, traces, points = sweep12
    rep = analyze_power_sweep(traces, chain, wgh20, reference_f0=SweepTruth().f_bare)
    chi = rep.column("chi_prime")
    truth = np.array([p.chi1 for p in points])
    sig = 2 / wgh20.p_m_perp * rep.column("f0_sigma_hz") / SweepTruth().f_bare
    assert np.all(np.abs(chi - truth) < 5 * sig + 1e-12)


def test_report_susceptibility_scale(report, wgh20):
    low = report.rows[0]
    assert 1e-9 <= low.chi_prime < 1e-8
    mat = summarize_material(report, wgh20.p_m_perp)
    assert mat.chi_double_prime_delta > 0
    assert mat.tan_delta >= mat.notes["tan_delta_high_power"] > 0
    assert math.isfinite(mat.chi_double_prime_delta)


def test_error_bars_grow_at_low_power(report):
    rho, _ = spearmanr(report.column("p_res_dbm"), report.column("q_sigma"))
    assert rho < -0.8


def test_report_row_values(report, wgh20, sweep12):
    chain, _, _ = sweep12
    r = report.rows[3]
    assert r.tan_delta == pytest.approx(loss_tangent(r.q, chain.beta1, 0.0, wgh20.p_e_total), rel=1e-15)
    assert r.chi_prime == pytest.approx(chi_prime(wgh20.p_m_perp, r.frac_shift), rel=1e-15)
    assert set(CSV_COLUMNS) <= set(r.to_dict())


def _trace(src, mode="WGH20"):
    p = FanoParams(1e10, 50.0, 0.1, 1.0, 0.0)
    return synth_trace(p, 201, 1000.0, 50.0, 0, TraceMeta(src, None, mode))


def test_sweep_validation(sweep12, wgh20):
    chain = sweep12[0]
    with pytest.raises(ValidationError):
        analyze_power_sweep([_trace(-10.0)], chain, wgh20)
    with pytest.raises(ValidationError, match="mix"):
        analyze_power_sweep([_trace(-10.0), _trace(0.0, "WGH19")], chain, wgh20)
    with pytest.raises(ValidationError):
        analyze_power_sweep([_trace(-10.0), _trace(None)], chain, wgh20)


def test_unconverged_rows_flagged(sweep12, wgh20, monkeypatch):
    import wgmkit.material as mat
    from dataclasses import replace

    real = mat.fit_fano
    monkeypatch.setattr(mat, "fit_fano", lambda t: replace(real(t), converged=False))
    rep = mat.analyze_power_sweep([_trace(-10.0), _trace(0.0)], sweep12[0], wgh20)
    assert len(rep.rows) == 2 and not any(r.converged for r in rep.rows)
