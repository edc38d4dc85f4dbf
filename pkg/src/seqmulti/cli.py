"""Command-line driver: ``seqmulti <command> [options]``.

All randomness flows from ``--seed``.  Results go to ``--out`` (or stdout) as
CSV; human-readable notes go to stderr.
"""

from __future__ import annotations

import argparse
import logging
import math
import os
import subprocess
import sys

from .config import PROCEDURES, THRESHOLD_SOURCES, ExperimentConfig, load_config
from .exceptions import SeqMultiError

log = logging.getLogger("seqmulti")


def _signals(text):
    text = text.strip()
    if not text:
        return frozenset()
    return frozenset(int(x) for x in text.replace(",", " ").split())


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("run")
    g.add_argument("--config", help="INI file with [panel] [prior] [procedure] [run]")
    g.add_argument("--seed", type=int)
    g.add_argument("--reps", type=int, help="replications per estimate")
    g.add_argument("--ess-reps", type=int, help="replications for sample sizes")
    g.add_argument("--horizon", type=int, help="truncation for every trial")
    g.add_argument("--out", help="CSV output path (default stdout)")
    g.add_argument("--threads", type=int, help="worker threads for the simulator")
    g.add_argument("-v", "--verbose", action="count", default=0)
    p = common.add_argument_group("setup")
    p.add_argument("--K", type=int, dest="K")
    p.add_argument("--theta1", type=float)
    p.add_argument("--procedure", choices=PROCEDURES)
    p.add_argument("--thresholds", choices=THRESHOLD_SOURCES)
    p.add_argument("--m", type=int)
    p.add_argument("--l", type=int)
    p.add_argument("--u", type=int)
    for name in "abcd":
        p.add_argument(f"--{name}", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--beta", type=float)
    p.add_argument("--tol", type=float)
    p.add_argument("--sizes", help="signal counts to scan, e.g. 0,5,10")
    p.add_argument("--signals", type=_signals,
                   help="0-based signal stream ids, e.g. 0,1,2 (default: first m or l)")

    parser = argparse.ArgumentParser(prog="seqmulti", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sim = sub.add_parser("simulate", parents=[common], help="per-replication trial records")
    sim.add_argument("--proposal", choices=("none", "typeI", "typeII"), default="none")
    est = sub.add_parser("estimate", parents=[common], help="error probability and ESS")
    est.add_argument("--method", choices=("is", "mc"), default="is")
    sub.add_parser("calibrate", parents=[common], help="tune the threshold to alpha")
    sub.add_parser("bound", parents=[common], help="conservative thresholds and bounds")
    sub.add_parser("lower-bound", parents=[common], help="ESS lower bound and approximation")
    sub.add_parser("table1", parents=[common], help="regression table")
    fig = sub.add_parser("figures", parents=[common], help="calibrated sweep over alpha")
    fig.add_argument("--alphas", help="strictly decreasing list, e.g. 1e-2,1e-3")
    return parser


def config_from_args(args) -> ExperimentConfig:
    base = load_config(args.config) if args.config else ExperimentConfig()
    changes = {name: getattr(args, name, None) for name in (
        "seed", "reps", "ess_reps", "horizon", "out", "K", "theta1", "procedure",
        "thresholds", "m", "l", "u", "a", "b", "c", "d", "alpha", "beta", "tol",
    )}
    if args.sizes:
        changes["sizes"] = tuple(int(x) for x in args.sizes.replace(",", " ").split())
    alphas = getattr(args, "alphas", None)
    if alphas:
        changes["alphas"] = tuple(float(x) for x in alphas.replace(",", " ").split())
    return base.updated(**changes)


def resolve_rule(config: ExperimentConfig):
    """The configured rule with its threshold source applied; returns the
    rule and the calibration record (or None)."""
    from .montecarlo import calibrate

    rule = config.base_rule()
    if config.thresholds == "conservative":
        return rule.conservative(config.K, config.alpha, config.beta), None
    if config.thresholds == "calibrated":
        result = calibrate(rule, config.panel(), config.error_spec, _prior(config, rule),
                           tol=config.tol, reps=config.reps, seed=config.seed,
                           horizon=config.horizon)
        return result.rule, result
    return rule, None


def _prior(config, rule):
    from .experiments import sweep_prior

    return sweep_prior(config, rule)


def _default_signals(config, rule, given):
    from .procedures import GapIntersectionRule, GapRule

    if given is not None:
        return given
    if isinstance(rule, GapRule):
        return frozenset(range(rule.m))
    if isinstance(rule, GapIntersectionRule):
        return frozenset(range(rule.l))
    return frozenset(range(config.m))


def _threshold_fields(rule) -> dict:
    params = rule.get_params()
    return {k: float(params[k]) if k in params else math.nan for k in "abcd"}


def _cmd_simulate(config, args):
    from .importance import build_proposal
    from .procedures import STOP_TAGS
    from .simulation import simulate

    rule, _ = resolve_rule(config)
    panel = config.panel()
    A = _default_signals(config, rule, args.signals)
    proposal = None
    if args.proposal != "none":
        proposal = build_proposal(rule, A, args.proposal, panel.K)
    batch = simulate(rule, panel, A, config.reps, config.seed, config.horizon, proposal)
    rows = []
    for i in range(batch.reps):
        rows.append({
            "rep": i,
            "stopping_time": int(batch.stopping_time[i]),
            "stopped_by": STOP_TAGS[int(batch.stop_code[i])],
            "decision": " ".join(str(k) for k in range(panel.K) if batch.decisions[i, k]),
            "log_lr": float(batch.log_lr[i]) if batch.log_lr is not None else 0.0,
        })
    return rows, ("rep", "stopping_time", "stopped_by", "decision", "log_lr")


def _cmd_estimate(config, args):
    from .importance import is_estimate_fwe
    from .montecarlo import estimate_ess, mc_estimate_fwe
    from .procedures import GapRule
    from .simulation import TYPE_I, TYPE_II

    rule, _ = resolve_rule(config)
    panel = config.panel()
    A = _default_signals(config, rule, args.signals)
    estimator = is_estimate_fwe if args.method == "is" else mc_estimate_fwe
    types = (TYPE_I,) if isinstance(rule, GapRule) else (TYPE_I, TYPE_II)
    ess = estimate_ess(rule, panel, A, config.ess_replications, config.seed, config.horizon)
    rows = []
    for et in types:
        err = estimator(rule, panel, A, et, config.reps, config.seed, config.horizon)
        rows.append({
            "procedure": _name(rule), "signals": _fmt_set(A), "method": args.method,
            "error_type": "any" if isinstance(rule, GapRule) else et,
            **_threshold_fields(rule),
            "error_estimate": err.value, "error_se": err.std_error,
            "ess": ess.value, "ess_se": ess.std_error, "horizon_hits": err.horizon_hits,
        })
    cols = ("procedure", "signals", "method", "error_type", "a", "b", "c", "d",
            "error_estimate", "error_se", "ess", "ess_se", "horizon_hits")
    return rows, cols


def _cmd_calibrate(config, args):
    from .montecarlo import calibrate

    rule = config.base_rule()
    result = calibrate(rule, config.panel(), config.error_spec, _prior(config, rule),
                       tol=config.tol, reps=config.reps, seed=config.seed,
                       horizon=config.horizon)
    row = {
        "procedure": _name(rule), "target": config.alpha, **_threshold_fields(result.rule),
        "error_estimate": result.achieved_error.value,
        "error_se": result.achieved_error.std_error,
        "worst_signals": _fmt_set(result.worst_A), "iterations": result.iterations,
    }
    print(
        f"{_name(rule)}: {rule.scalar_name} = {result.scalar:.6f} gives worst-case error "
        f"{result.achieved_error.value:.4e} (SE {result.achieved_error.std_error:.2e}) "
        f"at signals {{{_fmt_set(result.worst_A)}}} after {result.iterations} evaluations",
        file=sys.stderr,
    )
    cols = ("procedure", "target", "a", "b", "c", "d", "error_estimate", "error_se",
            "worst_signals", "iterations")
    return [row], cols


def _cmd_bound(config, args):
    from .bounds import fwe_bound_gap, fwe_bounds_gi
    from .procedures import GapRule

    rule, _ = resolve_rule(config)
    K = config.K
    prior = _prior(config, rule)
    rows = []
    for size in prior.sizes(K):
        if isinstance(rule, GapRule):
            b1 = b2 = fwe_bound_gap(K, rule.m, rule.c)
        else:
            # the exit rules have no gap thresholds: their gap terms vanish
            c, d = getattr(rule, "c", math.inf), getattr(rule, "d", math.inf)
            b1, b2 = fwe_bounds_gi(K, size, rule.a, rule.b, c, d)
        rows.append({"procedure": _name(rule), "size": size, **_threshold_fields(rule),
                     "bound_type1": b1, "bound_type2": b2})
    return rows, ("procedure", "size", "a", "b", "c", "d", "bound_type1", "bound_type2")


def _cmd_lower_bound(config, args):
    from .bounds import ess_lower_bound, first_order_ess

    rule = config.base_rule()
    prior = _prior(config, rule)
    panel = config.panel()
    spec = config.error_spec
    rows = []
    sets = [args.signals] if args.signals is not None else [
        frozenset(range(s)) for s in prior.sizes(config.K)
    ]
    for A in sets:
        rows.append({
            "signals": _fmt_set(A), "size": len(A), "alpha": config.alpha,
            "beta": config.beta, "lower_bound": ess_lower_bound(panel, A, prior, spec),
            "first_order": first_order_ess(panel, A, prior, spec),
        })
    return rows, ("signals", "size", "alpha", "beta", "lower_bound", "first_order")


def _cmd_table1(config, args):
    from .experiments import TABLE1_COLUMNS, run_table1

    return run_table1(config), TABLE1_COLUMNS


def _cmd_figures(config, args):
    from .experiments import SWEEP_COLUMNS, run_figure_sweep

    return run_figure_sweep(config), SWEEP_COLUMNS


def _name(rule):
    from .experiments import procedure_name

    return procedure_name(rule)


def _fmt_set(A):
    return " ".join(str(k) for k in sorted(A))


COMMANDS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "calibrate": _cmd_calibrate,
    "bound": _cmd_bound,
    "lower-bound": _cmd_lower_bound,
    "table1": _cmd_table1,
    "figures": _cmd_figures,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.WARNING - 10 * min(args.verbose, 2),
        format="%(levelname)s %(name)s: %(message)s",
    )
    if args.threads is not None:
        if args.threads < 1:
            print("seqmulti: error: --threads must be positive", file=sys.stderr)
            return 2
        if os.environ.get("NUMBA_NUM_THREADS") != str(args.threads):
            # numba fixes its pool size at import time, so relaunch with it set
            env = dict(os.environ, NUMBA_NUM_THREADS=str(args.threads))
            argv = sys.argv[1:] if argv is None else list(argv)
            cmd = [sys.executable, "-m", "seqmulti", *argv]
            return subprocess.run(cmd, env=env, check=False).returncode
    try:
        config = config_from_args(args)
        from .experiments import to_csv

        rows, columns = COMMANDS[args.command](config, args)
        text = to_csv(rows, columns)
    except (SeqMultiError, ValueError, TypeError, OSError) as exc:
        print(f"seqmulti: error: {exc}", file=sys.stderr)
        return 1
    if config.out:
        with open(config.out, "w", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
