"""Command line front end.

Subcommands: estimate, survival, bandwidth, deficiency, simulate,
kernel-table.  Every successful run prints one JSON document to stdout
holding the fully resolved configuration (all defaults filled in) plus
any inline results, and writes requested CSV/JSON artifacts to the
given paths.  Failures print an error JSON to stderr and exit with a
distinct code per error class: 2 usage (argparse), 3 I/O, 4 parse,
5 domain.
"""
from __future__ import annotations

import argparse
import json
import re
import sys

import numpy as np

from . import io as iolib
from .asymptotics import (MseExpansion, SmoothnessClass, deficiency_rate,
                          edf_deficiency, predicted_deficiency)
from .bandwidth import (BandwidthRule, NoPlateauError, auto_bandwidth,
                        cv_bandwidth_gaussian, cv_bandwidth_km,
                        default_cv_grid, default_freq_grid, default_rule,
                        ecf, noise_threshold)
from .estimators import CensoredSample, EstimatorConfig, evaluate_on_grid
from .kernels import (SMOOTH, TRAPEZOID, FlatTopSpec, GaussianKernel,
                      get_table)
from .simulate import (BUILTIN_SCENARIOS, ESTIMATORS, Scenario,
                       builtin_scenario, run_scenario)
from .survival import smoothed_survival_on_grid

EXIT_IO = 3
EXIT_PARSE = 4
EXIT_DOMAIN = 5

GAUSSIAN = "gaussian"


def _kernel_from_args(args):
    """Build the kernel object plus its resolved-config description."""
    family = args.kernel
    if family == GAUSSIAN:
        return GaussianKernel(), {"family": GAUSSIAN}
    c = args.c if args.c is not None else \
        (0.75 if family == TRAPEZOID else 0.05)
    spec = FlatTopSpec(family, c=c, b=args.b, effective_c=args.effective_c)
    table = get_table(spec, args.tol)
    desc = {"family": family, "c": spec.c, "b": spec.b,
            "effective_c": spec.effective_c, "tol": args.tol}
    return table, desc


def _resolve_bandwidth(args, sample, desc):
    """Returns (h, bandwidth config dict) for estimate/survival."""
    censored = not bool(np.all(sample.event))
    mode = args.bandwidth
    try:
        fixed = float(mode)
    except ValueError:
        fixed = None
    if fixed is not None:
        if not fixed > 0.0:
            raise ValueError("bandwidth must be positive")
        return fixed, {"mode": "fixed", "value": fixed}
    if mode == "auto":
        if desc["family"] == GAUSSIAN:
            raise ValueError("the automatic rule needs a flat-top kernel; "
                             "use --bandwidth cv or a numeric value")
        eff = desc["effective_c"]
        rule = default_rule(sample.n, eff, mode=args.bw_mode)
        C = args.bw_C if args.bw_C is not None else rule.C
        eps = args.bw_eps if args.bw_eps is not None else rule.epsilon
        rule = BandwidthRule(C, eps, eff, mode=args.bw_mode)
        h = auto_bandwidth(sample, eff, rule=rule)
        return h, {"mode": "auto", "value": h, "C": C, "epsilon": eps,
                   "effective_c": eff, "window_mode": args.bw_mode,
                   "threshold": noise_threshold(sample.n, C)}
    if mode == "cv":
        if desc["family"] != GAUSSIAN:
            raise ValueError("cross-validation drives the Gaussian "
                             "comparator; use --kernel gaussian")
        grid = default_cv_grid(sample)
        h = cv_bandwidth_km(sample, grid) if censored \
            else cv_bandwidth_gaussian(sample, grid)
        return h, {"mode": "cv", "value": h,
                   "h_grid": {"lo": float(grid[0]), "hi": float(grid[-1]),
                              "points": int(grid.size), "spacing": "log"}}
    raise iolib.ParseError(f"--bandwidth must be auto, cv, or a number, "
                           f"got {mode!r}")


def _resolve_grid(args, sample, h):
    if args.grid is not None:
        return iolib.parse_grid(args.grid), args.grid
    lo = float(np.min(sample.times) - 3.0 * h)
    hi = float(np.max(sample.times) + 3.0 * h)
    text = f"{lo!r}:{hi!r}:121"
    return np.linspace(lo, hi, 121), text


def _write_artifacts(args, payload, csv_text):
    outputs = {"csv": args.output, "json": getattr(args, "json_out", None)}
    if args.output:
        iolib.write_text(args.output, csv_text)
    if outputs["json"]:
        iolib.write_text(outputs["json"], iolib.dump_json(payload))
    return outputs


def _cmd_estimate(args):
    sample = iolib.read_sample_csv(args.input)
    if not np.all(sample.event):
        raise ValueError("estimate expects uncensored data; "
                         "use the survival subcommand for censored input")
    kernel, desc = _kernel_from_args(args)
    h, bw = _resolve_bandwidth(args, sample, desc)
    grid, grid_text = _resolve_grid(args, sample, h)
    cfg = EstimatorConfig(kernel, h, boundary=args.boundary,
                          standardize=args.standardize)
    values = evaluate_on_grid(sample, cfg, grid)
    payload = {
        "command": "estimate",
        "resolved_config": {
            "input": args.input, "kernel": desc, "bandwidth": bw,
            "boundary": args.boundary, "standardize": args.standardize,
            "grid": grid_text, "output": args.output,
        },
        "n": sample.n,
    }
    if not args.output:
        payload["t"] = [float(t) for t in grid]
        payload["value"] = [float(v) for v in values]
    payload["outputs"] = _write_artifacts(
        args, payload, iolib.curve_csv(grid, values))
    return payload


def _cmd_survival(args):
    sample = iolib.read_sample_csv(args.input)
    kernel, desc = _kernel_from_args(args)
    h, bw = _resolve_bandwidth(args, sample, desc)
    grid, grid_text = _resolve_grid(args, sample, h)
    cfg = EstimatorConfig(kernel, h, boundary=args.boundary,
                          standardize=args.standardize)
    values = smoothed_survival_on_grid(sample, cfg, grid)
    payload = {
        "command": "survival",
        "resolved_config": {
            "input": args.input, "kernel": desc, "bandwidth": bw,
            "boundary": args.boundary, "standardize": args.standardize,
            "grid": grid_text, "output": args.output,
        },
        "n": sample.n,
        "censored": int(np.sum(~sample.event)),
    }
    if not args.output:
        payload["t"] = [float(t) for t in grid]
        payload["value"] = [float(v) for v in values]
    payload["outputs"] = _write_artifacts(
        args, payload, iolib.curve_csv(grid, values))
    return payload


def _cmd_bandwidth(args):
    sample = iolib.read_sample_csv(args.input)
    censored = not bool(np.all(sample.event))
    if args.method == "cv":
        grid = default_cv_grid(sample)
        h = cv_bandwidth_km(sample, grid) if censored \
            else cv_bandwidth_gaussian(sample, grid)
        bw = {"mode": "cv", "value": h,
              "h_grid": {"lo": float(grid[0]), "hi": float(grid[-1]),
                         "points": int(grid.size), "spacing": "log"}}
        freqs = None
    else:
        eff = args.effective_c
        rule = default_rule(sample.n, eff, mode=args.bw_mode)
        C = args.bw_C if args.bw_C is not None else rule.C
        eps = args.bw_eps if args.bw_eps is not None else rule.epsilon
        rule = BandwidthRule(C, eps, eff, mode=args.bw_mode)
        if args.freq_grid is not None:
            freqs = iolib.parse_grid(args.freq_grid)
            grid_text = args.freq_grid
        else:
            freqs = default_freq_grid(sample)
            grid_text = f"{freqs[0]!r}:{freqs[-1]!r}:{freqs.size}"
        h = auto_bandwidth(sample, eff, rule=rule, freqs=freqs)
        bw = {"mode": "auto", "value": h, "C": C, "epsilon": eps,
              "effective_c": eff, "window_mode": args.bw_mode,
              "threshold": noise_threshold(sample.n, C),
              "t_star": eff / h, "freq_grid": grid_text}
    payload = {
        "command": "bandwidth",
        "resolved_config": {"input": args.input, "method": args.method,
                            "bandwidth": bw, "ecf_out": args.ecf_out},
        "n": sample.n,
        "censored": int(np.sum(~sample.event)),
        "h": h,
    }
    if args.ecf_out:
        curve = ecf(sample, freqs if freqs is not None
                    else default_freq_grid(sample))
        iolib.write_text(args.ecf_out,
                         iolib.curve_csv(curve.freqs, curve.magnitudes,
                                         value_name="magnitude"))
    payload["outputs"] = {"ecf_csv": args.ecf_out}
    return payload


def _parse_expansion(text: str) -> MseExpansion:
    parts = text.split(":")
    if len(parts) not in (4, 5):
        raise iolib.ParseError(
            f"expansion {text!r}: expected c:r:const:kind[:delta]")
    try:
        c, r, const = float(parts[0]), float(parts[1]), float(parts[2])
        delta = float(parts[4]) if len(parts) == 5 else None
    except ValueError:
        raise iolib.ParseError(f"expansion {text!r}: non-numeric field")
    return MseExpansion(c, r, const, second_kind=parts[3], delta=delta)


def _parse_n_list(text: str):
    try:
        vals = [float(p) for p in text.split(",") if p.strip() != ""]
    except ValueError:
        raise iolib.ParseError(f"--n {text!r}: expected comma-separated "
                               "numbers")
    if not vals:
        raise iolib.ParseError(f"--n {text!r}: empty")
    return vals


def _cmd_deficiency(args):
    ns = _parse_n_list(args.n)
    if args.assumption is not None:
        if args.assumption == "polynomial":
            if args.p is None:
                raise ValueError("--assumption polynomial needs --p")
            smooth = SmoothnessClass.polynomial(args.p)
            rate = f"n^{2 * args.p / (2 * args.p + 1):g}"
        elif args.assumption == "exponential":
            if args.d is None or args.D is None:
                raise ValueError("--assumption exponential needs --d and "
                                 "--D")
            smooth = SmoothnessClass.exponential(args.d, args.D)
            rate = "n/log n"
        elif args.assumption == "band-limited":
            if args.b_limit is None:
                raise ValueError("--assumption band-limited needs "
                                 "--b-limit")
            smooth = SmoothnessClass.band_limited(args.b_limit)
            rate = "n"
        else:
            raise iolib.ParseError(f"unknown assumption {args.assumption!r}")
        if args.F is None or args.f is None or args.cross_moment is None:
            raise ValueError("assumption mode needs --F, --f and "
                             "--cross-moment")
        if smooth.kind != "band-limited" and args.a is None:
            raise ValueError("polynomial and exponential assumptions need "
                             "the bandwidth premultiplier --a")
        values = [{"n": n,
                   "deficiency": edf_deficiency(smooth, args.F, args.f,
                                                args.cross_moment, n,
                                                args.a)}
                  for n in ns]
        payload = {
            "command": "deficiency",
            "resolved_config": {
                "assumption": args.assumption, "p": args.p, "d": args.d,
                "D": args.D, "b_limit": args.b_limit, "F": args.F,
                "f": args.f, "cross_moment": args.cross_moment,
                "a": args.a, "n": args.n,
            },
            "rate": rate,
            "values": values,
        }
        return payload
    if args.expansion_base is None or args.expansion_better is None:
        raise iolib.ParseError("pass either --assumption or both "
                               "--expansion-base and --expansion-better")
    base = _parse_expansion(args.expansion_base)
    better = _parse_expansion(args.expansion_better)
    limit, rate = deficiency_rate(base, better)
    values = [{"n": n, "deficiency": predicted_deficiency(base, better, n)}
              for n in ns]
    return {
        "command": "deficiency",
        "resolved_config": {"expansion_base": args.expansion_base,
                            "expansion_better": args.expansion_better,
                            "n": args.n},
        "limit": limit,
        "rate": rate,
        "values": values,
    }


def _cmd_kernel_table(args):
    if args.kernel == GAUSSIAN:
        raise ValueError("kernel-table exports flat-top tables; the "
                         "Gaussian kernel has closed forms")
    kernel, desc = _kernel_from_args(args)
    payload = {
        "command": "kernel-table",
        "resolved_config": {"kernel": desc, "output": args.output,
                            "json": args.json_out},
        "points": int(kernel.grid.size),
        "tail_cutoff": kernel.tail_cutoff,
    }
    lines = ["x,k,kbar,kbar_rectified"]
    for x, k, kb, kr in zip(kernel.grid, kernel.k_values,
                            kernel.kbar_values, kernel.kbar_rectified):
        lines.append(f"{float(x)!r},{float(k)!r},{float(kb)!r},"
                     f"{float(kr)!r}")
    csv_text = "\n".join(lines) + "\n"
    outputs = {"csv": args.output, "json": args.json_out}
    if args.output:
        iolib.write_text(args.output, csv_text)
    if args.json_out:
        iolib.write_text(args.json_out, iolib.dump_json(kernel.to_dict()))
    payload["outputs"] = outputs
    return payload


def _load_scenario(args) -> Scenario:
    name = args.scenario
    overrides = {}
    if args.n is not None:
        overrides["sample_sizes"] = iolib.parse_int_list(args.n, "--n")
    if args.reps is not None:
        overrides["replications"] = args.reps
    if args.seed is not None:
        overrides["seed"] = args.seed
    if name in BUILTIN_SCENARIOS:
        sc = builtin_scenario(name)
    else:
        try:
            with open(name, "r", encoding="utf-8") as fh:
                spec = json.load(fh)
        except json.JSONDecodeError as exc:
            raise iolib.ParseError(f"{name}: invalid scenario JSON ({exc})")
        try:
            sc = Scenario.from_dict(spec)
        except (KeyError, TypeError) as exc:
            raise iolib.ParseError(f"{name}: incomplete scenario: {exc!r}")
    if overrides:
        d = sc.to_dict()
        d.update(overrides)
        sc = Scenario.from_dict(d)
    return sc


def _cmd_simulate(args):
    sc = _load_scenario(args)
    estimators = tuple(args.estimators.split(",")) if args.estimators \
        else ESTIMATORS
    report = run_scenario(sc, estimators=estimators, workers=args.workers)
    payload = {
        "command": "simulate",
        "resolved_config": {"scenario": sc.to_dict(),
                            "estimators": list(estimators),
                            "workers": args.workers,
                            "output": args.output,
                            "json": args.json_out},
        "retries": [list(r) for r in report.retries],
    }
    outputs = {"csv": args.output, "json": args.json_out}
    if args.output:
        iolib.write_text(args.output, report.to_csv())
    if args.json_out:
        iolib.write_text(args.json_out, iolib.dump_json(report.to_dict()))
    if not args.output and not args.json_out:
        payload["cells"] = report.to_dict()["cells"]
    payload["outputs"] = outputs
    return payload


def _add_kernel_flags(p):
    p.add_argument("--kernel", default=TRAPEZOID,
                   choices=[TRAPEZOID, SMOOTH, GAUSSIAN])
    p.add_argument("--c", type=float, default=None,
                   help="flat radius (default 0.75 trapezoid, 0.05 smooth)")
    p.add_argument("--b", type=float, default=1.0,
                   help="smooth-family descent rate")
    p.add_argument("--effective-c", type=float, default=None, dest="effective_c")
    p.add_argument("--tol", type=float, default=1e-8,
                   help="kernel table certification tolerance")


def _add_bandwidth_flags(p):
    p.add_argument("--bandwidth", default="auto",
                   help="auto, cv, or a positive number")
    p.add_argument("--bw-C", type=float, default=None, dest="bw_C",
                   help="threshold constant (default 2)")
    p.add_argument("--bw-eps", type=float, default=None, dest="bw_eps",
                   help="window width (default max(1, log10 n))")
    p.add_argument("--bw-mode", default="threshold", dest="bw_mode",
                   choices=["threshold", "plateau"])


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ftcdf",
        description="Reduced-bias CDF and survival estimation with "
                    "flat-top kernels")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, fn in (("estimate", _cmd_estimate),
                     ("survival", _cmd_survival)):
        p = sub.add_parser(name)
        p.add_argument("--input", required=True)
        p.add_argument("--output", default=None, help="curve CSV path")
        p.add_argument("--json", default=None, dest="json_out",
                       help="also write the stdout document here")
        _add_kernel_flags(p)
        _add_bandwidth_flags(p)
        p.add_argument("--boundary", type=float, default=None)
        p.add_argument("--standardize", action="store_true")
        p.add_argument("--grid", default=None,
                       help="lo:hi:count or comma list (default: data "
                            "range padded by 3h, 121 points)")
        p.set_defaults(func=fn)

    p = sub.add_parser("bandwidth")
    p.add_argument("--input", required=True)
    p.add_argument("--method", default="auto", choices=["auto", "cv"])
    p.add_argument("--effective-c", type=float, default=0.75,
                   dest="effective_c")
    p.add_argument("--bw-C", type=float, default=None, dest="bw_C")
    p.add_argument("--bw-eps", type=float, default=None, dest="bw_eps")
    p.add_argument("--bw-mode", default="threshold", dest="bw_mode",
                   choices=["threshold", "plateau"])
    p.add_argument("--freq-grid", default=None, dest="freq_grid")
    p.add_argument("--ecf-out", default=None, dest="ecf_out",
                   help="write the ECF curve CSV here")
    p.set_defaults(func=_cmd_bandwidth)

    p = sub.add_parser("deficiency")
    p.add_argument("--assumption", default=None,
                   choices=["polynomial", "exponential", "band-limited"])
    p.add_argument("--p", type=float, default=None)
    p.add_argument("--d", type=float, default=None)
    p.add_argument("--D", type=float, default=None)
    p.add_argument("--b-limit", type=float, default=None, dest="b_limit")
    p.add_argument("--F", type=float, default=None,
                   help="target CDF value F(t)")
    p.add_argument("--f", type=float, default=None,
                   help="target density value f(t)")
    p.add_argument("--cross-moment", type=float, default=None,
                   dest="cross_moment")
    p.add_argument("--a", type=float, default=None,
                   help="bandwidth premultiplier")
    p.add_argument("--expansion-base", default=None, dest="expansion_base",
                   help="c:r:const:kind[:delta]")
    p.add_argument("--expansion-better", default=None,
                   dest="expansion_better")
    p.add_argument("--n", required=True,
                   help="comma-separated sample sizes")
    p.set_defaults(func=_cmd_deficiency)

    p = sub.add_parser("kernel-table")
    p.add_argument("--output", default=None, help="table CSV path")
    p.add_argument("--json", default=None, dest="json_out",
                   help="table JSON path")
    _add_kernel_flags(p)
    p.set_defaults(func=_cmd_kernel_table)

    p = sub.add_parser("simulate")
    p.add_argument("--scenario", required=True,
                   help=f"one of {', '.join(BUILTIN_SCENARIOS)} or a "
                        "scenario JSON path")
    p.add_argument("--n", default=None, help="sample sizes, e.g. 15,30")
    p.add_argument("--reps", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--estimators", default=None,
                   help=f"subset of {','.join(ESTIMATORS)}")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--output", default=None, help="MseReport CSV path")
    p.add_argument("--json", default=None, dest="json_out")
    p.set_defaults(func=_cmd_simulate)

    # grid specs like -3:3:121 start with a dash; without this argparse
    # refuses them as unknown options
    neg = re.compile(r"^-\d")
    parser._negative_number_matcher = neg
    for sp in sub.choices.values():
        sp._negative_number_matcher = neg
    return parser


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(iolib.dump_json(
        {"error": {"kind": kind, "message": message}}))
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        payload = args.func(args)
    except iolib.ParseError as exc:
        return _fail("parse", str(exc), EXIT_PARSE)
    except OSError as exc:
        return _fail("io", str(exc), EXIT_IO)
    except (ValueError, NoPlateauError, RuntimeError) as exc:
        return _fail("domain", str(exc), EXIT_DOMAIN)
    sys.stdout.write(iolib.dump_json(payload))
    return 0


if __name__ == "__main__":
    sys.exit(main())
