"""Regenerate the 12-trace sweep fixture and the golden CLI outputs.

    python scripts/make_golden.py

Writes tests/fixtures/sweep12/ (traces plus chain and mode configs) and
tests/golden/ (outputs of ``wgmkit sweep``, ``wgmkit mode`` and ``wgmkit fit``).
Only rerun when an intentional numerical change is made, then review the diff.
"""

import json
from pathlib import Path

import numpy as np

from wgmkit.cli import main
from wgmkit.io import write_trace_csv
from wgmkit.mode_solver import ModeSpec, solve_mode
from wgmkit.power_chain import measurement_chain
from wgmkit.synthetic import synth_sweep

ROOT = Path(__file__).resolve().parents[1]
FIX = ROOT / "tests" / "fixtures" / "sweep12"
GOLD = ROOT / "tests" / "golden"
SOURCE_DBM = np.linspace(-10.0, 56.0, 12)


def main_():
    FIX.mkdir(parents=True, exist_ok=True)
    GOLD.mkdir(parents=True, exist_ok=True)
    chain = measurement_chain()
    spec = ModeSpec(20, 0.025, 0.03, 9.27, 11.35)
    (FIX / "chain.json").write_text(json.dumps(chain.to_dict(), indent=2) + "\n")
    (FIX / "mode.json").write_text(json.dumps(spec.to_dict(), indent=2) + "\n")
    mode = solve_mode(spec)
    traces, _ = synth_sweep(SOURCE_DBM, chain, mode.p_m_perp, seed=0)
    for i, t in enumerate(traces):
        write_trace_csv(FIX / f"trace_{i:02d}.csv", t)

    runs = [
        ["sweep", "--inputs", str(FIX / "trace_*.csv"), "--chain", str(FIX / "chain.json"),
         "--mode", str(FIX / "mode.json"), "--out", str(GOLD / "sweep.json")],
        ["mode", "--config", str(FIX / "mode.json"), "--out", str(GOLD / "mode.json")],
        ["fit", "--input", str(FIX / "trace_05.csv"), "--out", str(GOLD / "fit_trace_05.json")],
    ]
    for argv in runs:
        code = main(argv)
        if code:
            raise SystemExit(f"wgmkit {' '.join(argv)} exited {code}")
    print(f"fixtures in {FIX}, golden outputs in {GOLD}")


if __name__ == "__main__":
    main_()
