"""Command line front end.

Subcommands wrap the harness: `sweep` and `asymmetric` run Monte-Carlo
distortion sweeps and write CSVs, `curves` tabulates the analytic exponent
curves on their own, and `dmt-experiment` / `mindist` expose the two
diagnostic decay experiments.  Configuration errors exit with status 2.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from .exponents import curve_tabulate, loglog_slope
from .harness import (ExperimentSpec, default_analytic_curves, emit_curves,
                      parse_experiment_spec, run_asymmetric, run_sweep)
from .model import ConfigError
from .phy import min_distance_experiment, qam_dmt_experiment


def _float_list(text: str) -> tuple[float, ...]:
    try:
        return tuple(float(tok) for tok in text.replace(",", " ").split())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected numbers, got {text!r}")


def _rc_value(text: str):
    if text == "auto":
        return None
    try:
        return float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"--rc takes 'auto' or a number, got {text!r}")


def _add_geometry(p: argparse.ArgumentParser):
    p.add_argument("--K", type=int, default=4, help="number of users")
    p.add_argument("--Nt", type=int, default=1, help="transmit antennas per user")
    p.add_argument("--M", type=int, default=4, help="receive antennas")
    p.add_argument("--b", type=float, default=4.0, help="bandwidth ratio T/S")
    p.add_argument("--S", type=int, default=1, help="source samples per block")


def _add_run(p: argparse.ArgumentParser):
    p.add_argument("--trials", type=int, default=100_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--rc", type=_rc_value, default=None, metavar="auto|FLOAT",
                   help="channel code rate; 'auto' tracks the exponent optimum")
    p.add_argument("--out", default="results", help="output directory for CSVs")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="macfeedback",
        description="Distortion sweeps and exponent curves for channel-state "
                    "feedback over a fading multiple-access channel.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sweep", help="Monte-Carlo distortion sweep")
    p.add_argument("--spec", help="experiment spec file (flat key=value or JSON); "
                                  "other flags override its fields")
    p.add_argument("--scheme", choices=("analog", "separated", "hybrid",
                                        "ideal", "all"), default=None)
    _add_geometry(p)
    p.add_argument("--snr-db", type=_float_list, default=None,
                   metavar="LIST", help="comma separated SNR grid in dB")
    _add_run(p)

    p = sub.add_parser("asymmetric", help="separated sweep with per-user SNRs")
    _add_geometry(p)
    p.add_argument("--per-user-snr", type=_float_list, required=True,
                   metavar="LIST", help="nominal per-user SNRs in dB")
    p.add_argument("--class-snr", type=_float_list,
                   default=(12.0412, 18.0618, 24.0824), metavar="LIST",
                   help="SNR grid each class is swept over in turn "
                        "(the other users stay at their nominals)")
    _add_run(p)

    p = sub.add_parser("curves", help="tabulate analytic exponent curves")
    p.add_argument("--K", type=int, default=4)
    p.add_argument("--Nt", type=int, default=1)
    p.add_argument("--M", type=int, default=4)
    p.add_argument("--b-grid", type=_float_list, default=None, metavar="LIST",
                   help="bandwidth-ratio grid (default 0.25..12 step 0.25)")
    p.add_argument("--kinds", default="upper_bound,separated,hybrid,sic",
                   help="comma separated curve kinds")
    p.add_argument("--out", default="results")

    p = sub.add_parser("dmt-experiment", help="uncoded QAM error-decay check")
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--r", type=float, default=0.0, help="multiplexing gain")
    p.add_argument("--snr-db", type=_float_list,
                   default=(10.0, 15.0, 20.0, 25.0), metavar="LIST")
    p.add_argument("--trials", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results")

    p = sub.add_parser("mindist", help="lattice minimum-distance decay check")
    p.add_argument("--N", type=int, default=2)
    p.add_argument("--eps", type=_float_list,
                   default=(0.05, 0.1, 0.2, 0.3, 0.4), metavar="LIST")
    p.add_argument("--trials", type=int, default=200_000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default="results")

    return parser


_FLAG_ATTRS = (("K", "K"), ("Nt", "N_t"), ("M", "M"), ("b", "b"), ("S", "S"),
               ("trials", "trials"), ("seed", "seed"))
_FLAG_DEFAULTS = {"K": 4, "Nt": 1, "M": 4, "b": 4.0, "S": 1,
                  "trials": 100_000, "seed": 0}


def _spec_from_args(args) -> ExperimentSpec:
    from dataclasses import replace
    if not args.spec:
        return ExperimentSpec(
            scheme=args.scheme or "separated",
            K=args.K, N_t=args.Nt, M=args.M, b=args.b, S=args.S,
            snr_db_grid=args.snr_db or (12.0412, 18.0618, 24.0824),
            trials=args.trials, seed=args.seed, r_c=args.rc, out_dir=args.out)
    spec = parse_experiment_spec(Path(args.spec).read_text(encoding="utf-8"))
    # flags left at their argparse defaults must not clobber the spec file
    overrides = {}
    if args.scheme is not None:
        overrides["scheme"] = args.scheme
    if args.snr_db is not None:
        overrides["snr_db_grid"] = args.snr_db
    for flag, attr in _FLAG_ATTRS:
        if getattr(args, flag) != _FLAG_DEFAULTS[flag]:
            overrides[attr] = getattr(args, flag)
    if args.rc is not None:
        overrides["r_c"] = args.rc
    if args.out != "results":
        overrides["out_dir"] = args.out
    return replace(spec, **overrides)


def _cmd_sweep(args) -> int:
    spec = _spec_from_args(args)
    results = run_sweep(spec)
    curves = default_analytic_curves(spec)
    paths = emit_curves(results, spec.out_dir, curves)
    for res in results:
        line = f"{res.scheme}: {len(res.records)} SNR points"
        if np.isfinite(res.slope):
            line += f", fitted decay exponent {res.slope:.3f} ± {res.slope_stderr:.3f}"
        print(line)
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_asymmetric(args) -> int:
    spec = ExperimentSpec(scheme="separated", K=args.K, N_t=args.Nt, M=args.M,
                          b=args.b, S=args.S, snr_db_grid=args.class_snr,
                          trials=args.trials, seed=args.seed, r_c=args.rc,
                          per_user_snr_db=args.per_user_snr, out_dir=args.out)
    results = run_asymmetric(spec)
    paths = emit_curves(results, spec.out_dir, default_analytic_curves(spec))
    for res in results:
        line = f"class {res.user_class}: {len(res.records)} points"
        if np.isfinite(res.slope):
            line += f", fitted decay exponent {res.slope:.3f} ± {res.slope_stderr:.3f}"
        print(line)
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_curves(args) -> int:
    b_grid = np.asarray(args.b_grid) if args.b_grid else np.arange(0.25, 12.01, 0.25)
    kinds = [k.strip() for k in args.kinds.split(",") if k.strip()]
    # the hybrid layout needs b >= 1; clip its grid rather than erroring out
    curves = [curve_tabulate(kind, args.K, args.Nt, args.M,
                             b_grid[b_grid >= 1] if kind == "hybrid" else b_grid)
              for kind in kinds]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "curves.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("x,y,kind\n")
        for curve in curves:
            for x, y in curve.points:
                fh.write(f"{format(x, '.12g')},{format(y, '.12g')},{curve.kind}\n")
    print(f"wrote {path}")
    return 0


def _cmd_dmt(args) -> int:
    result = qam_dmt_experiment(M=args.M, r=args.r, snr_db_grid=args.snr_db,
                                trials=args.trials, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "dmt_experiment.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("snr_db,error_rate\n")
        for (rho, pe) in result.curve.points:
            fh.write(f"{format(10 * np.log10(rho), '.12g')},{format(pe, '.12g')}\n")
    print(f"error-rate decay exponent {result.slope:.3f} ± {result.slope_stderr:.3f}")
    print(f"wrote {path}")
    return 0


def _cmd_mindist(args) -> int:
    probs = min_distance_experiment(N=args.N, trials=args.trials,
                                    epsilons=args.eps, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "mindist.csv"
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("epsilon,probability\n")
        for eps, p in zip(args.eps, probs):
            fh.write(f"{format(eps, '.12g')},{format(p, '.12g')}\n")
    # P grows like eps^(2N); loglog_slope sign-flips for decays, so negate
    slope, stderr = loglog_slope(np.asarray(args.eps), probs, upper_half=False)
    print(f"small-distance CDF exponent {-slope:.3f} ± {stderr:.3f}")
    print(f"wrote {path}")
    return 0


_COMMANDS = {"sweep": _cmd_sweep, "asymmetric": _cmd_asymmetric,
             "curves": _cmd_curves, "dmt-experiment": _cmd_dmt,
             "mindist": _cmd_mindist}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ValueError, FileNotFoundError) as exc:
        # ConfigError is a ValueError; both are user-input problems here
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
