"""Command line front end.

Subcommands: simulate (write a dataset CSV), identify (fit a model from a
dataset and a config file, write run artifacts), predict (one-step or
surface predictions from saved artifacts), check (gradient/consistency
property suite).

Exit codes: 0 success, 2 configuration error, 3 numerical or particle
degeneracy, 4 property-suite failure.
"""

import argparse
import sys

import numpy as np

from .checks import run_property_suite
from .config import load_config
from .errors import ConfigError, NumericalDegeneracyError, ParticleDegeneracyError
from .psaem import (RunArtifacts, identify, predict_onestep, predict_surface,
                    write_predictions)
from .simulate import Dataset, simulate_linear, simulate_nonlinear


def _build_parser():
    parser = argparse.ArgumentParser(
        prog="gpssm",
        description="Identify nonlinear dynamical systems as GP state-space "
                    "models by particle stochastic approximation EM.")
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="simulate a benchmark system to CSV")
    sim.add_argument("--system", choices=["linear", "nonlinear"], required=True)
    sim.add_argument("--horizon", type=int, default=120,
                     help="number of transitions (default 120)")
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--noise-scale", type=float, default=1.0,
                     help="multiplier on both noise variances (default 1)")
    sim.add_argument("--input", choices=["sine", "impulse"], default="sine",
                     help="input signal for the linear system (default sine)")
    sim.add_argument("--out", required=True, help="output CSV path")

    fit = sub.add_parser("identify", help="run the identification loop")
    fit.add_argument("--data", required=True, help="training dataset CSV")
    fit.add_argument("--config", required=True, help="INI config file")
    fit.add_argument("--out", required=True, help="output artifact directory")
    fit.add_argument("--iterations", type=int, default=None,
                     help="override [run] iterations from the config")
    fit.add_argument("--seed", type=int, default=None,
                     help="override [run] seed from the config")
    fit.add_argument("--quiet", action="store_true",
                     help="suppress progress output")

    pred = sub.add_parser("predict", help="predictions from saved artifacts")
    pred.add_argument("--run", required=True, help="artifact directory from identify")
    pred.add_argument("--data", required=True,
                      help="training dataset CSV (rebuilds the fitted model)")
    pred.add_argument("--mode", choices=["onestep", "surface"], default="onestep")
    pred.add_argument("--test", help="test dataset CSV (onestep mode)")
    pred.add_argument("--target", choices=["state", "step"], default="state",
                      help="onestep mode: predict the next state, or the "
                           "noise-free step increment (default state)")
    pred.add_argument("--x-range", default=None, metavar="LO:HI:N",
                      help="surface mode: state grid; write --x-range=-5:5:41 "
                           "when LO is negative")
    pred.add_argument("--u-range", default=None, metavar="LO:HI:N",
                      help="surface mode: input grid")
    pred.add_argument("--average-top", type=int, default=0, metavar="M",
                      help="average over the M highest-weight stored "
                           "trajectories instead of the final one")
    pred.add_argument("--no-process-noise", action="store_true",
                      help="onestep state mode: drop process noise from the "
                           "reported std")
    pred.add_argument("--out", required=True, help="output CSV path")

    chk = sub.add_parser("check", help="run the property suite")
    chk.add_argument("--seed", type=int, default=1234)
    return parser


def _cmd_simulate(args):
    if args.system == "linear":
        data = simulate_linear(args.horizon, seed=args.seed,
                               noise_scale=args.noise_scale,
                               input_kind=args.input)
    else:
        data = simulate_nonlinear(args.horizon, seed=args.seed,
                                  noise_scale=args.noise_scale)
    data.save(args.out)
    print(f"wrote {args.out} ({data.horizon} transitions)")
    return 0


def _cmd_identify(args):
    config = load_config(args.config)
    if args.iterations is not None:
        config.set("run", "iterations", args.iterations)
    if args.seed is not None:
        config.set("run", "seed", args.seed)
    data = Dataset.load(args.data)

    callback = None
    if not args.quiet:
        total = config.get("run", "iterations")
        every = max(1, total // 10)

        def callback(k, model, res):
            if k % every == 0 or k == total:
                print(f"iteration {k}/{total}  surrogate {res.value:.4f}",
                      file=sys.stderr)

    artifacts = identify(data, config, callback=callback)
    artifacts.save(args.out)
    print(f"wrote artifacts to {args.out} "
          f"({artifacts.iterations} iterations, {artifacts.runtime:.1f}s)")
    return 0


def _parse_range(text, flag):
    try:
        lo, hi, n = text.split(":")
        lo, hi, n = float(lo), float(hi), int(n)
    except (ValueError, AttributeError):
        raise ConfigError(f"{flag} must look like LO:HI:N, got {text!r}")
    if n < 1:
        raise ConfigError(f"{flag}: N must be >= 1")
    return np.linspace(lo, hi, n)


def _cmd_predict(args):
    train = Dataset.load(args.data)
    artifacts = RunArtifacts.load(args.run, train)
    if args.mode == "onestep":
        if args.test is None:
            raise ConfigError("onestep mode needs --test")
        test = Dataset.load(args.test)
        if test.x_true is None:
            raise ConfigError("onestep mode needs a test CSV with an "
                              "x_true column")
        table = predict_onestep(
            artifacts, train.u, test,
            mode=args.target,
            include_process_noise=not args.no_process_noise,
            average_top=args.average_top)
    else:
        if args.x_range is None or args.u_range is None:
            raise ConfigError("surface mode needs --x-range and --u-range")
        x_grid = _parse_range(args.x_range, "--x-range")
        u_grid = _parse_range(args.u_range, "--u-range")
        table = predict_surface(artifacts, train.u, x_grid, u_grid,
                                average_top=args.average_top)
    write_predictions(args.out, table)
    print(f"wrote {args.out} ({len(table['mean'])} rows)")
    return 0


def _cmd_check(args):
    results = run_property_suite(seed=args.seed)
    failed = 0
    for name, passed, detail in results:
        tag = "PASS" if passed else "FAIL"
        print(f"[{tag}] {name}: {detail}")
        failed += 0 if passed else 1
    if failed:
        print(f"{failed} of {len(results)} checks failed")
        return 4
    print(f"all {len(results)} checks passed")
    return 0


_COMMANDS = {
    "simulate": _cmd_simulate,
    "identify": _cmd_identify,
    "predict": _cmd_predict,
    "check": _cmd_check,
}


def main(argv=None):
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (NumericalDegeneracyError, ParticleDegeneracyError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
