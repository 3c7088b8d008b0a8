"""Monte-Carlo study of fitted Q and its reported error bar versus SNR.

    python scripts/error_bar_study.py --traces 200 --out error_bars.csv
"""

import argparse
import sys

import numpy as np

from wgmkit.errors import AnalysisError
from wgmkit.io import format_csv_table
from wgmkit.lineshape import FanoParams, fit_fano, synth_trace


def run(snrs, n_traces, q_true, points, span_widths):
    p = FanoParams(13.869e9, 13.869e9 / q_true, 0.3, 1.0, 0.01)
    rows = []
    for snr in snrs:
        qs, sig = [], []
        fails = 0
        for seed in range(n_traces):
            try:
                r = fit_fano(synth_trace(p, points, span_widths * p.gamma, snr, seed))
            except AnalysisError:
                fails += 1
                continue
            qs.append(r.q_loaded)
            sig.append(r.q_sigma)
        qs, sig = np.array(qs), np.array(sig)
        rows.append((snr, qs.mean() / q_true, qs.std(ddof=1), sig.mean(), np.median(sig), fails))
    return rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--snr", type=float, nargs="+", default=[1, 2, 3, 5, 10, 30, 100])
    ap.add_argument("--traces", type=int, default=200)
    ap.add_argument("--q", type=float, default=3e8)
    ap.add_argument("--points", type=int, default=1001)
    ap.add_argument("--span-widths", type=float, default=10.0)
    ap.add_argument("--out")
    args = ap.parse_args(argv)
    rows = run(args.snr, args.traces, args.q, args.points, args.span_widths)
    text = format_csv_table(("snr", "mean_q_ratio", "empirical_sigma_q", "mean_reported_sigma_q", "median_sigma_q", "failed"), rows)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    sys.stdout.write(text)


if __name__ == "__main__":
    main()
