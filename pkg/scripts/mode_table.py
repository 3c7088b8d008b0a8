"""Resonance frequency and filling factors of WGH_{m,0,0} modes for one crystal.

    python scripts/mode_table.py --m 15 22 --radius 0.025 --height 0.03
"""

import argparse
import sys

from wgmkit.io import format_csv_table
from wgmkit.mode_solver import SAPPHIRE_EPS_PAR, SAPPHIRE_EPS_PERP, ModeSpec, field_amplitudes, solve_mode


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--m", type=int, nargs=2, default=(15, 22), metavar=("LO", "HI"))
    ap.add_argument("--radius", type=float, default=0.025)
    ap.add_argument("--height", type=float, default=0.03)
    ap.add_argument("--eps-perp", type=float, default=SAPPHIRE_EPS_PERP)
    ap.add_argument("--eps-par", type=float, default=SAPPHIRE_EPS_PAR)
    ap.add_argument("--energy", type=float, default=1e-21, help="stored energy (J) for the peak-field columns")
    args = ap.parse_args(argv)
    rows = []
    prev = None
    for m in range(args.m[0], args.m[1] + 1):
        sol = solve_mode(ModeSpec(m, args.radius, args.height, args.eps_perp, args.eps_par))
        e_pk, h_pk = field_amplitudes(sol, args.energy)
        fsr = sol.f_res - prev if prev else float("nan")
        prev = sol.f_res
        rows.append((m, sol.f_res, fsr, sol.p_e_perp, sol.p_e_par, sol.p_m_perp, e_pk, h_pk))
    sys.stdout.write(format_csv_table(("m", "f_res_hz", "spacing_hz", "p_e_perp", "p_e_par", "p_m_perp", "e_peak", "h_peak"), rows))


if __name__ == "__main__":
    main()
