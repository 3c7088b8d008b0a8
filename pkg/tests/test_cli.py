import json
import shutil
import subprocess
import sys

import pytest

from wgmkit.cli import main

from .conftest import FIXTURES, GOLDEN

SWEEP = FIXTURES / "sweep12"
SWEEP_OUTPUTS = ("sweep.json", "sweep.csv", "sweep_q_vs_power.csv", "sweep_shift_vs_power.csv", "sweep_tand_vs_field.csv")


def run_sweep(out_dir):
    return main([
        "sweep", "--inputs", str(SWEEP / "trace_*.csv"), "--chain", str(SWEEP / "chain.json"),
        "--mode", str(SWEEP / "mode.json"), "--out", str(out_dir / "sweep.json"),
    ])


def test_sweep_matches_golden(tmp_path):
    assert run_sweep(tmp_path) == 0
    for name in SWEEP_OUTPUTS:
        assert (tmp_path / name).read_bytes() == (GOLDEN / name).read_bytes(), name


def test_sweep_deterministic(tmp_path):
    a, b = tmp_path / "a", tmp_path / "b"
    a.mkdir()
    b.mkdir()
    assert run_sweep(a) == 0 and run_sweep(b) == 0
    for name in SWEEP_OUTPUTS:
        assert (a / name).read_bytes() == (b / name).read_bytes()


def test_sweep_report_contents(tmp_path):
    run_sweep(tmp_path)
    rep = json.loads((tmp_path / "sweep.json").read_text())
    assert len(rep["rows"]) == 12 and rep["reference"] == "highest-power trace"
    header = (tmp_path / "sweep.csv").read_text().splitlines()[0]
    assert header == "p_source_dbm,p_res_dbm,q,q_sigma,f0_hz,f0_sigma_hz,frac_shift,chi_prime,tan_delta,e_peak,h_peak,n_photon"


def test_mode_and_fit_golden(tmp_path):
    assert main(["mode", "--config", str(SWEEP / "mode.json"), "--out", str(tmp_path / "mode.json")]) == 0
    assert (tmp_path / "mode.json").read_bytes() == (GOLDEN / "mode.json").read_bytes()
    assert main(["fit", "--input", str(SWEEP / "trace_05.csv"), "--out", str(tmp_path / "fit.json")]) == 0
    assert (tmp_path / "fit.json").read_bytes() == (GOLDEN / "fit_trace_05.json").read_bytes()


def test_synth_then_fit(tmp_path):
    trace = tmp_path / "t.csv"
    assert main(["synth", "--f0", "13.869e9", "--q", "3e8", "--asym", "0.3", "--amp", "1", "--baseline", "0.01",
                 "--points", "401", "--span", "925", "--snr", "50", "--seed", "4", "--out", str(trace)]) == 0
    first = trace.read_bytes()
    main(["synth", "--f0", "13.869e9", "--q", "3e8", "--asym", "0.3", "--amp", "1", "--baseline", "0.01",
          "--points", "401", "--span", "925", "--snr", "50", "--seed", "4", "--out", str(trace)])
    assert trace.read_bytes() == first
    assert main(["fit", "--input", str(trace), "--out", str(tmp_path / "r.json")]) == 0
    rep = json.loads((tmp_path / "r.json").read_text())
    assert rep["converged"] is True
    assert rep["q_loaded"] == pytest.approx(3e8, rel=0.02)


def test_fit_with_guess(tmp_path):
    guess = json.dumps({"f0": 13869000000.0, "gamma": 46.0, "q_asym": 0.2, "amp": 1.0, "baseline": 0.0})
    out = tmp_path / "r.json"
    assert main(["fit", "--input", str(SWEEP / "trace_11.csv"), "--guess", guess, "--out", str(out)]) == 0
    assert main(["fit", "--input", str(SWEEP / "trace_11.csv"), "--guess", "{bad", "--out", str(out)]) == 2


def test_chain_prints(capsys):
    assert main(["chain", "--config", str(SWEEP / "chain.json"), "--source-dbm", "0"]) == 0
    assert capsys.readouterr().out.strip() == "-113.99 dBm"


def test_missing_input(tmp_path, capsys):
    code = main(["fit", "--input", str(tmp_path / "absent.csv"), "--out", str(tmp_path / "r.json")])
    assert code == 2
    assert "absent.csv" in capsys.readouterr().err
    assert not (tmp_path / "r.json").exists()


def test_unknown_command(capsys):
    assert main(["frobnicate"]) == 2
    assert "usage" in capsys.readouterr().err


def test_no_partial_outputs(tmp_path):
    # sweep with a bad trace: nothing is written
    d = tmp_path / "in"
    d.mkdir()
    shutil.copy(SWEEP / "trace_00.csv", d / "a.csv")
    (d / "b.csv").write_text("freq_hz,s21_mag\n1,0.1\n0.5,0.1\n")
    code = main(["sweep", "--inputs", str(d / "*.csv"), "--chain", str(SWEEP / "chain.json"),
                 "--mode", str(SWEEP / "mode.json"), "--out", str(tmp_path / "s.json")])
    assert code == 2
    assert not list(tmp_path.glob("s*"))


def test_missing_output_dir(tmp_path):
    code = main(["mode", "--config", str(SWEEP / "mode.json"), "--out", str(tmp_path / "no" / "m.json")])
    assert code == 2


def test_internal_error_exit_1(tmp_path):
    cfg = tmp_path / "mode.json"
    cfg.write_text(json.dumps({"m": 20, "radius_m": 0.025, "height_m": 0.03, "eps_perp": 1.0, "eps_par": 1.0}))
    # a vacuum "crystal" has no confined WGH mode: an analysis failure, not bad input
    assert main(["mode", "--config", str(cfg), "--out", str(tmp_path / "m.json")]) == 1


def test_module_entry_point(tmp_path):
    proc = subprocess.run([sys.executable, "-m", "wgmkit", "chain", "--config", str(SWEEP / "chain.json"),
                           "--source-dbm", "-26"], capture_output=True, text=True, env={"WGMKIT_LOG": "DEBUG", "PATH": ""})
    assert proc.returncode == 0 and proc.stdout.strip() == "-139.99 dBm"
