"""Command-line entry point: ``sirmsr {sir,bstar,trial,sweep,compare}``."""

from __future__ import annotations

import argparse
import contextlib
import logging
import sys
from dataclasses import replace

import numpy as np

from .config import CONFIG_KEYS, ConfigError, build_trial_config, load_config, parse_config
from .epidemic import (
    AdaptiveGlobal,
    DynamicLocal,
    FixedReduction,
    HeterogeneityError,
    NoEpidemicError,
    NoReduction,
    SirParams,
    SirState,
    TimeLimited,
    dynamic_heterogeneity_bound,
    peak_bound_static,
    simulate_sir,
    solve_b_star,
    static_heterogeneity_bound,
)
from .harness import SWEEP_AXES, SweepGrid, run_policy_comparison, run_sweep, run_trial, write_sweep_metadata

EXIT_CONFIG = 2
DESK_TRIALS = 20
FULL_SCALE_N = 1000
FULL_SCALE_TRIALS = 50


@contextlib.contextmanager
def _output(path):
    if path in (None, "-"):
        yield sys.stdout
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            yield fh


def _parse_range(text: str):
    lo, hi, steps = text.split(":")
    steps = int(steps)
    if steps < 1:
        raise ValueError("steps must be >= 1")
    return tuple(np.linspace(float(lo), float(hi), steps)) if steps > 1 else (float(lo),)


def _axis_range(text: str):
    if "=" not in text:
        raise argparse.ArgumentTypeError(f"expected AXIS=lo:hi:steps, got {text!r}")
    axis, rng = text.split("=", 1)
    if axis not in SWEEP_AXES:
        raise argparse.ArgumentTypeError(f"unknown axis {axis!r}; choose from {', '.join(SWEEP_AXES)}")
    try:
        return axis, _parse_range(rng)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {rng!r}: {exc}") from None


def _plain_range(text: str):
    try:
        return _parse_range(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad range {text!r}: {exc}") from None


def _trial_config(args):
    values = load_config(args.config) if args.config else {}
    if args.set:
        values.update(parse_config(args.set))
    if args.seed is not None:
        values["seed"] = args.seed
    return build_trial_config(values)


def _sir_policy(args):
    if args.policy == "none":
        return NoReduction()
    if args.policy == "fixed":
        return FixedReduction(args.b0)
    if args.policy == "adaptive":
        return AdaptiveGlobal(args.c)
    if args.policy == "timelimited":
        return TimeLimited(args.b0, args.k_start, args.k_end)
    return DynamicLocal(args.w_bar)


def cmd_sir(args) -> int:
    beta = args.r0 * args.gamma if args.r0 is not None else args.beta
    params = SirParams(beta=beta, gamma=args.gamma, dt=args.dt)
    trace = simulate_sir(params, _sir_policy(args), SirState.initial(args.s0, args.i0), args.horizon)
    with _output(args.out) as fh:
        trace.write_csv(fh)
    return 0


def cmd_bstar(args) -> int:
    try:
        b = solve_b_star(args.r0, args.w_bar)
    except (NoEpidemicError, HeterogeneityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    print(f"b_star = {b:.10g}")
    print(f"W_s = {static_heterogeneity_bound(args.r0):.10g}")
    print(f"W_d = {dynamic_heterogeneity_bound(args.r0):.10g}")
    print(f"I_max = {peak_bound_static(b, args.r0).value:.10g}")
    return 0


def cmd_trial(args) -> int:
    cfg = _trial_config(args)
    res = run_trial(cfg)
    if args.out:
        with _output(args.out) as fh:
            res.write_time_response(fh)
    if args.status_out:
        with _output(args.status_out) as fh:
            res.write_status_trace(fh)
    print(f"verdict = {res.verdict.value}")
    print(f"reason = {res.reason}")
    print(f"peak_I = {res.peak_i:.10g}")
    print(f"w_bar = {res.w_bar:.10g}")
    print(f"final_spread = {res.final_spread:.10g}")
    print(f"steps = {res.steps}")
    print(res.feasibility.render(), end="")
    for w in res.warnings:
        print(f"warning: {w}", file=sys.stderr)
    return 0


def cmd_sweep(args) -> int:
    if len(args.range) != 2:
        raise ConfigError("sweep needs exactly two --range AXIS=lo:hi:steps options")
    cfg = _trial_config(args)
    trials = args.trials
    if args.full_scale:
        cfg = replace(cfg, n=FULL_SCALE_N)
        trials = trials or FULL_SCALE_TRIALS
    (a1, v1), (a2, v2) = args.range
    try:
        grid = SweepGrid(a1, v1, a2, v2, trials=trials or DESK_TRIALS)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None
    with _output(args.out) as fh:
        run_sweep(grid, cfg, out=fh, workers=args.workers)
    if args.out not in (None, "-"):
        write_sweep_metadata(grid, cfg, args.out + ".meta.json")
    return 0


def cmd_compare(args) -> int:
    with _output(args.out) as fh:
        run_policy_comparison(args.r0_range, gamma=args.gamma, dt=args.dt, s0=args.s0, i0=args.i0, out=fh)
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="sirmsr", description=__doc__)
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("sir", help="simulate the SIR layer alone and write k,S,I,R,b")
    s.add_argument("--beta", type=float, default=0.4)
    s.add_argument("--gamma", type=float, default=0.1)
    s.add_argument("--dt", type=float, default=0.01)
    s.add_argument("--r0", type=float, help="sets beta = r0 * gamma")
    s.add_argument("--s0", type=float, default=0.99)
    s.add_argument("--i0", type=float, default=0.01)
    s.add_argument("--policy", choices=("none", "fixed", "adaptive", "timelimited", "dynamic"), default="none")
    s.add_argument("--b0", type=float, default=0.7)
    s.add_argument("--c", type=float, default=2.0)
    s.add_argument("--k-start", type=int, default=1000)
    s.add_argument("--k-end", type=int, default=3000)
    s.add_argument("--w-bar", type=float, default=0.0)
    s.add_argument("--horizon", type=int, default=6000)
    s.add_argument("--out")
    s.set_defaults(func=cmd_sir)

    b = sub.add_parser("bstar", help="largest safe static reduction and heterogeneity bounds")
    b.add_argument("--r0", type=float, required=True)
    b.add_argument("--w-bar", type=float, default=0.0)
    b.set_defaults(func=cmd_bstar)

    def trial_opts(q):
        q.add_argument("--config", help="key = value file; keys: " + " ".join(CONFIG_KEYS))
        q.add_argument("--set", action="append", metavar="KEY=VALUE", help="override one config key")
        q.add_argument("--seed", type=int)
        q.add_argument("--out")

    t = sub.add_parser("trial", help="one coupled run; writes the time-response CSV")
    trial_opts(t)
    t.add_argument("--status-out", help="also write the per-step status CSV")
    t.set_defaults(func=cmd_trial)

    w = sub.add_parser("sweep", help="Monte-Carlo success rates over two axes")
    trial_opts(w)
    w.add_argument("--range", action="append", type=_axis_range, default=[], metavar="AXIS=lo:hi:steps")
    w.add_argument("--trials", type=int, help=f"trials per cell (default {DESK_TRIALS}, {FULL_SCALE_TRIALS} at full scale)")
    w.add_argument("--full-scale", action="store_true", help=f"n={FULL_SCALE_N} and {FULL_SCALE_TRIALS} trials per cell")
    w.add_argument("--workers", type=int, default=1)
    w.set_defaults(func=cmd_sweep)

    c = sub.add_parser("compare", help="pure-SIR peak and t(I<0.1) per policy over R0")
    c.add_argument("--r0-range", type=_plain_range, default=tuple(float(v) for v in range(1, 20)), metavar="lo:hi:steps")
    c.add_argument("--gamma", type=float, default=0.1)
    c.add_argument("--dt", type=float, default=0.01)
    c.add_argument("--s0", type=float, default=0.9)
    c.add_argument("--i0", type=float, default=0.1)
    c.add_argument("--out")
    c.set_defaults(func=cmd_compare)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
