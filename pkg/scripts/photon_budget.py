"""Power at the resonator, stored energy, photon number and peak fields versus source power.

    python scripts/photon_budget.py --q 2e8 --source -40 20 5
"""

import argparse
import sys

import numpy as np

from wgmkit.io import format_csv_table
from wgmkit.mode_solver import ModeSpec, field_amplitudes, solve_mode
from wgmkit.power_chain import chain_apply, dbm_to_watts, intracavity_state, measurement_chain


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--q", type=float, default=2e8, help="loaded Q")
    ap.add_argument("--beta1", type=float, default=0.02)
    ap.add_argument("--m", type=int, default=20)
    ap.add_argument("--source", type=float, nargs=3, default=(-40.0, 20.0, 5.0), metavar=("START", "STOP", "STEP"))
    args = ap.parse_args(argv)
    chain = measurement_chain(args.beta1)
    mode = solve_mode(ModeSpec(args.m, 0.025, 0.03, 9.27, 11.35))
    rows = []
    for src in np.arange(args.source[0], args.source[1] + 0.5 * args.source[2], args.source[2]):
        p_res = chain_apply(float(src), chain)
        st = intracavity_state(dbm_to_watts(p_res), chain, args.q, mode.f_res)
        e_pk, h_pk = field_amplitudes(mode, st.energy)
        rows.append((src, p_res, st.p_abs, st.energy, st.photon_number, e_pk, h_pk))
    sys.stdout.write(format_csv_table(("source_dbm", "p_res_dbm", "p_abs_w", "energy_j", "n_photon", "e_peak", "h_peak"), rows))


if __name__ == "__main__":
    main()
