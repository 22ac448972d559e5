"""Command-line entry point: ``scc-lfc {run,sweep-alpha,calibrate-attack,plot}``.

Exit codes: 0 success, 1 relay trip with ``--fail-on-trip``, 2 config error.
"""

import argparse
import csv
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .scenario import ConfigError, calibrate_attack, load_config, run, write_trace

EXIT_OK = 0
EXIT_TRIP = 1
EXIT_CONFIG = 2


def _apply_overrides(cfg, args):
    changes = {}
    if getattr(args, "no_scc", False):
        changes["scc_enabled"] = False
    if getattr(args, "alpha", None) is not None:
        changes["scc.alpha"] = args.alpha
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    try:
        return cfg.with_(**changes) if changes else cfg
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _format_summary(name, s):
    lines = [
        f"scenario              {name}",
        f"max |d_omega_hat|     {s.max_abs_d_omega_hat:.6g} pu",
        f"max |omega_dot_hat|   {s.max_abs_omega_dot_hat:.6g} pu/s",
        f"trip events           {', '.join(str(e) for e in s.trip_events) or 'none'}",
        f"scc_active_time       {s.scc_active_time:.6g} s",
        f"scc activations       {len(s.scc_activation_intervals)}",
        f"alarm_count           {s.alarm_count}",
        "settling_time         "
        + ("never" if s.settling_time is None else f"{s.settling_time:.6g} s"),
    ]
    return "\n".join(lines)


def _write_alarm_log(trace, intervals, path):
    """One row per SCC activation interval with the largest correction applied."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_start", "t_end", "max_abs_correction"])
        it = iter(trace)
        for t0, t1 in intervals:
            peak = 0.0
            for r in it:
                if r.t >= t1:
                    break
                if r.t >= t0:
                    peak = max(peak, abs(r.dp_c_star - r.dp_c_attacked))
            w.writerow([format(t0, ".9g"), format(t1, ".9g"), format(peak, ".9g")])


def cmd_run(args):
    cfg = _apply_overrides(load_config(args.config), args)
    trace, summary = run(cfg)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    stem = Path(args.config).stem
    write_trace(trace, out / f"{stem}.csv")
    with open(out / f"{stem}_summary.json", "w") as fh:
        json.dump(summary.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
    _write_alarm_log(trace, summary.scc_activation_intervals, out / f"{stem}_alarms.csv")
    print(_format_summary(stem, summary))
    print(f"trace written to {out / (stem + '.csv')}")
    if args.fail_on_trip and summary.trip_events:
        return EXIT_TRIP
    return EXIT_OK


def _sweep_one(args):
    cfg, alpha = args
    _, s = run(cfg.with_(**{"scc.alpha": alpha}))
    return alpha, s


def cmd_sweep(args):
    cfg = _apply_overrides(load_config(args.config), args)
    try:
        alphas = [float(a) for a in args.alphas.split(",") if a.strip()]
    except ValueError:
        raise ConfigError(f"--alphas: cannot parse {args.alphas!r}") from None
    if not alphas or any(a <= 0 for a in alphas):
        raise ConfigError("--alphas needs positive values")
    cfg = cfg.with_(scc_enabled=True)
    jobs = [(cfg, a) for a in alphas]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]

    print(f"{'alpha':>8} {'max|rocof|':>12} {'max|dw|':>12} {'scc_time':>10} {'trips':>6}")
    for alpha, s in results:
        print(f"{alpha:8.3g} {s.max_abs_omega_dot_hat:12.6g} {s.max_abs_d_omega_hat:12.6g} "
              f"{s.scc_active_time:10.4g} {len(s.trip_events):6d}")
    tripped = any(s.trip_events for _, s in results)
    return EXIT_TRIP if args.fail_on_trip and tripped else EXIT_OK


def cmd_calibrate(args):
    cfg = _apply_overrides(load_config(args.config), args)
    res = calibrate_attack(cfg, element=args.element, within=args.within)
    for amp, hit in res.history:
        print(f"  amplitude {amp:.6g}: {'trip' if hit else 'no trip'}")
    print(f"attack frequency      {res.frequency:.6g} Hz")
    print(f"minimum amplitude     {res.amplitude:.6g} pu (trips {res.element} within {args.within:g} s)")
    return EXIT_OK


def cmd_plot(args):
    from .plotting import plot_trace

    try:
        paths = plot_trace(args.trace, args.out, fmt=args.format)
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for p in paths:
        print(p)
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(
        prog="scc-lfc",
        description="Load-frequency-control simulator with a barrier-function safety filter.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("config", help="scenario YAML file")
        p.add_argument("--no-scc", action="store_true", help="disable the safety filter")
        p.add_argument("--alpha", type=float, help="override scc.alpha")
        p.add_argument("--seed", type=int, help="override the RNG seed")

    p = sub.add_parser("run", help="simulate one scenario and write its trace")
    common(p)
    p.add_argument("--out", default="out", help="output directory (default: out)")
    p.add_argument("--fail-on-trip", action="store_true", help="exit with status 1 if any relay trips")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep-alpha", help="compare runs across alpha values")
    common(p)
    p.add_argument("--alphas", default="3,20", help="comma-separated alpha values (default: 3,20)")
    p.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    p.add_argument("--fail-on-trip", action="store_true", help="exit with status 1 if any run trips")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("calibrate-attack", help="find the smallest tripping attack amplitude")
    common(p)
    p.add_argument("--element", default="ROCOF", choices=["ROCOF", "OF", "UF"],
                   help="relay element the attack must trip")
    p.add_argument("--within", type=float, default=30.0, help="trip deadline in seconds")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("plot", help="render figures from a trace CSV")
    p.add_argument("trace", help="trace CSV written by 'run'")
    p.add_argument("--out", help="output directory (default: next to the trace)")
    p.add_argument("--format", default="png", help="image format (default: png)")
    p.set_defaults(func=cmd_plot)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
