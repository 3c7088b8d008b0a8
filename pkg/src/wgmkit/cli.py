"""Command-line front end.

Exit status: 0 on success, 2 on invalid input (bad flags, missing or
malformed files), 1 on any other failure. ``WGMKIT_LOG`` sets the log level.
"""

from __future__ import annotations

import argparse
import glob
import json
import logging
import os
import sys
from pathlib import Path

from .errors import ValidationError
from .io import (
    atomic_write_text,
    dumps_report,
    format_csv_table,
    format_trace_csv,
    load_json,
    parse_trace_csv,
)
from .lineshape import FanoParams, TraceMeta, fit_fano, synth_trace
from .material import CSV_COLUMNS, analyze_power_sweep, summarize_material
from .mode_solver import ModeSpec, solve_mode
from .power_chain import PowerChain, chain_apply

log = logging.getLogger("wgmkit")


def _parse_guess(text: str) -> FanoParams:
    if os.path.isfile(text):
        data = load_json(text)
    else:
        try:
            data = json.loads(text)
        except json.JSONDecodeError:
            raise ValidationError(f"--guess is neither a file nor valid JSON: {text!r}") from None
    return FanoParams.from_dict(data)


def cmd_fit(args) -> dict:
    trace = parse_trace_csv(args.input)
    guess = _parse_guess(args.guess) if args.guess else None
    result = fit_fano(trace, guess)
    report = result.to_dict()
    report["input"] = os.path.basename(args.input)
    report["n_points"] = len(trace)
    return {args.out: dumps_report(report)}


def cmd_synth(args) -> dict:
    if args.q <= 0:
        raise ValidationError("--q must be positive")
    params = FanoParams(args.f0, args.f0 / args.q, args.asym, args.amp, args.baseline)
    meta = TraceMeta(args.source_dbm, args.temperature_mk, args.mode_label)
    trace = synth_trace(params, args.points, args.span, args.snr, args.seed, meta)
    return {args.out: format_trace_csv(trace)}


def cmd_chain(args) -> dict:
    chain = PowerChain.from_dict(load_json(args.config))
    p_res = chain_apply(args.source_dbm, chain)
    print(f"{p_res:.2f} dBm")
    if args.out:
        return {args.out: dumps_report({"source_dbm": args.source_dbm, "p_res_dbm": p_res, "chain": chain.to_dict()})}
    return {}


def cmd_mode(args) -> dict:
    spec = ModeSpec.from_dict(load_json(args.config))
    sol = solve_mode(spec)
    return {args.out: dumps_report(sol.to_dict())}


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(out.stem + suffix)


def cmd_sweep(args) -> dict:
    paths = sorted(glob.glob(args.inputs))
    if not paths:
        raise ValidationError(f"no trace files match {args.inputs!r}")
    traces = [parse_trace_csv(p) for p in paths]
    chain = PowerChain.from_dict(load_json(args.chain))
    mode = solve_mode(ModeSpec.from_dict(load_json(args.mode)))
    report = analyze_power_sweep(traces, chain, mode, reference_f0=args.reference_f0)
    material = summarize_material(report, mode.p_m_perp)

    data = report.to_dict()
    data["inputs"] = [os.path.basename(p) for p in paths]
    data["material"] = material.to_dict()
    out = Path(args.out)
    rows = report.rows
    return {
        out: dumps_report(data),
        _sibling(out, ".csv"): format_csv_table(CSV_COLUMNS, ([getattr(r, c) for c in CSV_COLUMNS] for r in rows)),
        _sibling(out, "_q_vs_power.csv"): format_csv_table(
            ("p_res_dbm", "q", "q_sigma"), ((r.p_res_dbm, r.q, r.q_sigma) for r in rows)
        ),
        _sibling(out, "_shift_vs_power.csv"): format_csv_table(
            ("p_res_dbm", "frac_shift", "frac_shift_sigma", "chi_prime"),
            ((r.p_res_dbm, r.frac_shift, r.f0_sigma_hz / report.reference_f0, r.chi_prime) for r in rows),
        ),
        _sibling(out, "_tand_vs_field.csv"): format_csv_table(
            ("e_peak", "h_peak", "tan_delta", "tan_delta_mag", "p_res_dbm"),
            ((r.e_peak, r.h_peak, r.tan_delta, r.tan_delta_mag, r.p_res_dbm) for r in rows),
        ),
    }


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wgmkit", description="WGM resonator analysis toolkit")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fit", help="fit a Fano lineshape to a trace CSV")
    p.add_argument("--input", required=True)
    p.add_argument("--guess", help="initial FanoParams as inline JSON or a JSON file")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("synth", help="write a synthetic Fano trace CSV")
    p.add_argument("--f0", type=float, required=True)
    p.add_argument("--q", type=float, required=True, help="loaded Q (gamma = f0 / Q)")
    p.add_argument("--asym", type=float, default=0.0)
    p.add_argument("--amp", type=float, default=1.0)
    p.add_argument("--baseline", type=float, default=0.0)
    p.add_argument("--points", type=int, default=1001)
    p.add_argument("--span", type=float, required=True)
    p.add_argument("--snr", type=float, default=float("inf"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--source-dbm", type=float)
    p.add_argument("--temperature-mk", type=float)
    p.add_argument("--mode-label")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("chain", help="source power to power at the resonator")
    p.add_argument("--config", required=True)
    p.add_argument("--source-dbm", type=float, required=True)
    p.add_argument("--out")
    p.set_defaults(func=cmd_chain)

    p = sub.add_parser("mode", help="solve a WGH mode")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_mode)

    p = sub.add_parser("sweep", help="analyse a power sweep")
    p.add_argument("--inputs", required=True, help="glob of trace CSV files")
    p.add_argument("--chain", required=True)
    p.add_argument("--mode", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--reference-f0", type=float, help="frequency-shift reference (default: highest-power fit)")
    p.set_defaults(func=cmd_sweep)
    return parser


def _setup_logging() -> None:
    level = os.environ.get("WGMKIT_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")


def main(argv=None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        outputs = args.func(args)
        for path in outputs:
            if not Path(path).parent.is_dir():
                raise ValidationError(f"output directory does not exist: {Path(path).parent}")
        for path, text in outputs.items():
            atomic_write_text(path, text)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:
        log.debug("internal error", exc_info=True)
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
