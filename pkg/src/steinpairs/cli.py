"""Command-line entry point: ``steinpairs <command> ...``.

Exit status is 0 on success, 2 on invalid configuration and 3 when
``--check`` is given and a threshold check fails.
"""

import argparse
import json
import sys

import numpy as np

from .experiment import (ConfigError, ExperimentConfig, PRESETS, acceptance_checks,
                         checks_key, preset_config, run_experiment)
from .indeptest import analyze_data
from .limitdist import GFunction, check_conditions, normalize
from .steinsolve import stein_f, stein_fprime

EXIT_OK, EXIT_CONFIG, EXIT_CHECK = 0, 2, 3


def _int_list(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _z_grid(text):
    vals = [float(v) for v in text.split(",")]
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("z grid is MIN,MAX,STEP")
    return vals


def _common(p):
    p.add_argument("--sizes", type=_int_list)
    p.add_argument("--mc", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--z-grid", type=_z_grid, dest="z_grid")
    p.add_argument("--alpha", type=float)
    p.add_argument("--workers", type=int)
    p.add_argument("--batches", type=int)
    p.add_argument("--output-dir", dest="output_dir")
    p.add_argument("--config", help="JSON config file; flags override its values")
    p.add_argument("--check", action="store_true", help="exit 3 if a threshold check fails")


def _g_args(p):
    p.add_argument("--g", default="linear", choices=("linear", "power"))
    p.add_argument("--scale", type=float, default=1.0)
    p.add_argument("--alpha", type=float, default=3.0, help="exponent for --g power")


def build_parser():
    parser = argparse.ArgumentParser(prog="steinpairs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a preset or a config file")
    run.add_argument("--preset", choices=sorted(PRESETS))
    _common(run)

    qf = sub.add_parser("quadform").add_subparsers(dest="action", required=True)
    p = qf.add_parser("run")
    p.add_argument("--matrix")
    p.add_argument("--law")
    _common(p)

    cw = sub.add_parser("curieweiss").add_subparsers(dest="action", required=True)
    p = cw.add_parser("run")
    p.add_argument("--law")
    p.add_argument("--beta", type=float)
    p.add_argument("--k", type=int)
    _common(p)

    it = sub.add_parser("indeptest").add_subparsers(dest="action", required=True)
    p = it.add_parser("run")
    p.add_argument("--law")
    p.add_argument("--np", type=_int_list, dest="np_sizes", help="sizes p (n = p)")
    p.add_argument("--inner", type=int)
    p.add_argument("--data", help="CSV matrix, rows = variables; prints W and tail areas")
    _common(p)

    ld = sub.add_parser("limitdist").add_subparsers(dest="action", required=True)
    p = ld.add_parser("inspect", help="normalise c1 exp(-G) and print the condition report")
    _g_args(p)
    p.add_argument("--x-max", type=float, dest="x_max")

    st = sub.add_parser("stein").add_subparsers(dest="action", required=True)
    p = st.add_parser("eval", help="evaluate f_z and f_z' at x")
    _g_args(p)
    p.add_argument("--z", type=float, required=True)
    p.add_argument("--x", type=float, required=True)
    return parser


def _g_from(args):
    if args.g == "linear":
        return GFunction.linear(args.scale)
    return GFunction.power(args.alpha, args.scale)


def _config_from(args, application=None):
    kw = {}
    if getattr(args, "preset", None):
        kw = preset_config(args.preset).to_dict()
    if args.config:
        with open(args.config) as fh:
            kw.update(json.load(fh))
    if application is not None:
        kw["application"] = application
    for name in ("sizes", "mc", "seed", "z_grid", "alpha", "workers", "batches", "output_dir"):
        value = getattr(args, name, None)
        if value is not None:
            kw[name] = value
    params = dict(kw.get("params", {}))
    for name in ("matrix", "law", "beta", "k", "inner"):
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    if getattr(args, "np_sizes", None) is not None:
        kw["sizes"] = args.np_sizes
    kw["params"] = params
    missing = [f for f in ("application", "sizes", "mc") if f not in kw]
    if missing:
        raise ConfigError([(f, "required") for f in missing])
    try:
        return ExperimentConfig(**kw)
    except TypeError as exc:
        raise ConfigError([("config", str(exc))])


def _run(args, application=None):
    config = _config_from(args, application).validate()
    report = run_experiment(config)
    print(json.dumps({"output_dir": config.output_dir,
                      "rate_fits": {k: v["slope"] for k, v in report["rate_fits_all"].items()}},
                     sort_keys=True))
    if args.check:
        checks = acceptance_checks(checks_key(config), report)
        for c in checks:
            print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}")
        if not all(c.passed for c in checks):
            return EXIT_CHECK
    return EXIT_OK


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "run":
            if not args.preset and not args.config:
                raise ConfigError([("preset", "give --preset or --config")])
            return _run(args)
        if args.command in ("quadform", "curieweiss"):
            return _run(args, args.command)
        if args.command == "indeptest":
            if args.data:
                X = np.loadtxt(args.data, delimiter=",", ndmin=2)
                print(json.dumps(analyze_data(X), sort_keys=True))
                return EXIT_OK
            return _run(args, "indeptest")
        g = _g_from(args)
        if args.command == "limitdist":
            dist = normalize(g, x_max=args.x_max)
            out = {"distribution": dist.to_dict(),
                   "conditions": check_conditions(g, dist).to_dict()}
        else:
            dist = normalize(g)
            out = {"z": args.z, "x": args.x,
                   "f": float(stein_f(dist, args.z, args.x)),
                   "fprime": float(stein_fprime(dist, args.z, args.x))}
        print(json.dumps(out, sort_keys=True, default=float))
        return EXIT_OK
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
