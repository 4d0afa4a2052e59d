"""Command-line front end: ``tdlsim <subcommand> --flags``.

Every subcommand writes its primary output to ``--out`` (``-`` = stdout).
Bad inputs exit with status 2 and a one-line JSON error on stderr.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import calibrate as cal
from . import harness
from ._io import text_out
from .config import ConfigError, load
from .linearity import report, write_dnl_csv
from .tdl_model import profile_to_csv
from .uncertainty import JitterBudget, budget, budget_eq7, RO_WEIGHTS, read_ro_csv, ro_extract

EXIT_USAGE = 2


class CliError(Exception):
    def __init__(self, kind: str, message: str):
        super().__init__(message)
        self.kind = kind


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, np.generic):
        return obj.item()
    return obj


def _write_json(obj, target) -> None:
    with text_out(target) as fh:
        fh.write(json.dumps(_plain(obj), indent=2))
        fh.write("\n")


def _config(args):
    try:
        return load(args.config)
    except ConfigError as exc:
        raise CliError("config", str(exc)) from exc


def _system(args, cfg):
    return cfg.build_system(args.variant)


def cmd_density(args) -> None:
    cfg = _config(args)
    sys_ = _system(args, cfg)
    hist = harness.code_density_run(sys_, args.samples, args.seed, args.threads)
    cal.write_histogram_csv(hist, args.out)
    if args.report or args.dnl_csv:
        rep = report(hist)
        if args.report:
            _write_json({"variant": sys_.variant, "samples": args.samples, "seed": args.seed,
                         **rep.summary()}, args.report)
        if args.dnl_csv:
            write_dnl_csv(rep, args.dnl_csv)


def _interval_params(args, cfg) -> dict:
    p = {"start": 0.0, "step": 9.41, "steps": None, "reps": 50_000, "calib_samples": 1_000_000}
    p.update(cfg.interval)
    for key in p:
        val = getattr(args, key)
        if val is not None:
            p[key] = val
    return p


def cmd_interval(args) -> None:
    cfg = _config(args)
    sys_ = _system(args, cfg)
    p = _interval_params(args, cfg)
    hist = harness.code_density_run(sys_, p["calib_samples"], args.seed, args.threads)
    sys_ = harness.calibrate_system(sys_, hist)
    res = harness.time_interval_run(sys_, p["start"], p["step"], p["steps"], p["reps"],
                                    seed=args.seed + 1, threads=args.threads)
    _write_json({"variant": sys_.variant, "seed": args.seed, **res.to_dict()}, args.out)
    if args.csv:
        with text_out(args.csv) as fh:
            fh.write("true_interval_ps,mean_measured_ps,mean_error_ps,std_ps\n")
            for t, m, e, s in zip(res.true_interval, res.mean_measured, res.mean_error, res.std):
                fh.write(",".join(repr(float(x)) for x in (t, m, e, s)) + "\n")


def cmd_calibrate(args) -> None:
    try:
        hist = cal.read_histogram_csv(args.hist, args.measurement_range)
    except (OSError, ValueError) as exc:
        raise CliError("input", str(exc)) from exc
    work = cal.bin_pairs(hist) if args.binned else hist
    table = cal.boundaries(work)
    out = {"code_offset": hist.code_offset, "binned": args.binned,
           "measurement_range_ps": work.measurement_range,
           "cal_table": table.to_dict(), "linearity": report(work).summary()}
    if not args.no_compensation:
        comp, cmap = cal.compensate(work, drop_missing=not args.keep_missing, surplus=args.surplus)
        out["compensation"] = cmap.to_dict()
        out["compensated_linearity"] = report(comp).summary()
    _write_json(out, args.out)


def _read_json(path):
    try:
        if path == "-":
            return json.load(sys.stdin)
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise CliError("input", str(exc)) from exc


def cmd_budget(args) -> None:
    raw = _read_json(args.input)
    try:
        b = JitterBudget.from_dict(raw)
    except (TypeError, ValueError) as exc:
        raise CliError("input", str(exc)) from exc
    out = budget(b).to_dict()
    if None not in (b.sigma_start, b.sigma_inl, b.sigma_qav, b.sigma_extra):
        out["sigma_eq7"] = budget_eq7(b)
    _write_json(out, args.out)


def cmd_ro_fit(args) -> None:
    try:
        pts = read_ro_csv(args.input)
        sigma_cy, sigma_lut = ro_extract(pts, args.weights)
    except (OSError, ValueError) as exc:
        raise CliError("input", str(exc)) from exc
    _write_json({"sigma_cy_ps": sigma_cy, "sigma_lut_ps": sigma_lut, "points": len(pts)}, args.out)


def cmd_compare(args) -> None:
    cfg = _config(args)
    kw = {k: v for k, v in cfg.system.items() if k == "decimation"}
    out = harness.compare(cfg.delay, cfg.launcher, args.samples, args.seed,
                          threads=args.threads, **kw)
    _write_json(out, args.out)


def cmd_profile(args) -> None:
    cfg = _config(args)
    profile_to_csv(_system(args, cfg).profile, args.out)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="tdlsim", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def sim(name, help_):
        s = sub.add_parser(name, help=help_)
        s.add_argument("--config", required=True, help="TOML experiment file")
        s.add_argument("--variant", choices=harness.VARIANTS, help="override [system].variant")
        s.add_argument("--seed", type=int, default=0)
        s.add_argument("--threads", type=int, default=None,
                       help=f"worker threads (default ${harness.THREADS_ENV} or 1)")
        s.add_argument("--out", default="-")
        return s

    s = sim("density", "code-density histogram")
    s.add_argument("--samples", type=int, default=1_000_000)
    s.add_argument("--report", help="LinearityReport JSON path")
    s.add_argument("--dnl-csv", help="per-bin DNL/INL CSV path")
    s.set_defaults(func=cmd_density)

    s = sim("interval", "calibrate, then measure fixed intervals")
    s.add_argument("--start", type=float)
    s.add_argument("--step", type=float)
    s.add_argument("--steps", type=int)
    s.add_argument("--reps", type=int)
    s.add_argument("--calib-samples", type=int)
    s.add_argument("--csv", help="per-interval CSV path")
    s.set_defaults(func=cmd_interval)

    s = sim("compare", "linearity of the WU/DS/DSWU/binned-DSWU variants on one profile")
    s.add_argument("--samples", type=int, default=1_000_000)
    s.set_defaults(func=cmd_compare)

    s = sim("profile", "tap timing CSV")
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("calibrate", help="bin boundaries and compensation map from a histogram CSV")
    s.add_argument("--hist", required=True)
    s.add_argument("--measurement-range", type=float, help="ps; overrides the CSV header")
    s.add_argument("--binned", action="store_true", help="merge bin pairs first")
    s.add_argument("--no-compensation", action="store_true")
    s.add_argument("--keep-missing", action="store_true", help="keep missing codes as empty bins")
    s.add_argument("--surplus", choices=cal.SURPLUS_RULES, default="share")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_calibrate)

    s = sub.add_parser("budget", help="precision budget from a JSON jitter budget")
    s.add_argument("--input", required=True, help="JSON file or - for stdin")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_budget)

    s = sub.add_parser("ro-fit", help="per-element and LUT jitter from ring-oscillator data")
    s.add_argument("--input", required=True, help="CSV rows of m,sigma_ro_ps")
    s.add_argument("--weights", choices=RO_WEIGHTS, default="relative")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_ro_fit)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except CliError as exc:
        print(json.dumps({"error": exc.kind, "message": str(exc)}), file=sys.stderr)
        return EXIT_USAGE
    except (ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
