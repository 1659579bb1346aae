"""Command-line front end.

Five subcommands: ``solve`` (one solver run), ``mc`` (iteration-count
distribution over seeded realizations), ``curve`` (expected iterations
against ensemble size), ``sweep`` (beat probabilities across coarse-grid
resolutions of the analytic benchmark), and ``errors`` (accuracy statistics
against the serial fine solution).

Results go to stdout, or to ``--output`` as CSV or JSON.  All numbers are
written with 17 significant digits, and both writers are deterministic, so
rerunning a command byte-reproduces its output.  ``--plot`` additionally
renders a matplotlib figure next to the output file (same name, ``.png``).

Exit status: 0 on success (a converged solve, or an experiment whose
realizations all completed), 1 on a failed run, 2 on usage errors.  The
``PINT_SEED`` environment variable supplies the default ``--seed``.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

import numpy as np

from .core import BlowUpError, SamplingRule
from .experiments import (
    ErrorProfile,
    KDistribution,
    coarse_step_sweep,
    error_profile,
    estimate_k_distribution,
    expectation_curve,
)
from .parareal import RunResult, run_parareal
from .problems import PROBLEM_NAMES, get_problem
from .stochastic import run_stochastic_parareal

__all__ = ["build_parser", "parse_args", "main"]


# ---------------------------------------------------------------------------
# Serialization: %.17g floats everywhere, hand-rolled JSON so key order and
# float formatting are pinned (reruns must be byte-identical).

def format_float(value: float) -> str:
    return "%.17g" % value


def _json_value(obj) -> str:
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, bool) or isinstance(obj, np.bool_):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(float(obj))
    if isinstance(obj, dict):
        items = (f"{json.dumps(str(k))}: {_json_value(v)}" for k, v in obj.items())
        return "{" + ", ".join(items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ", ".join(_json_value(v) for v in obj) + "]"
    if obj is None:
        return "null"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def to_json(payload: dict) -> str:
    return _json_value(payload) + "\n"


def to_csv(header: "list[str]", rows: "list[list]") -> str:
    def cell(v) -> str:
        if isinstance(v, bool):
            return "true" if v else "false"
        if isinstance(v, (int, np.integer)):
            return str(int(v))
        if isinstance(v, (float, np.floating)):
            return format_float(float(v))
        return str(v)

    lines = [",".join(header)]
    lines.extend(",".join(cell(v) for v in row) for row in rows)
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Payload builders, one per subcommand.

def solve_payload(result: RunResult, problem: str, mesh) -> dict:
    return {
        "solver": result.solver,
        "problem": problem,
        "iterations": result.iterations,
        "converged": result.converged,
        "fine_solver_calls": result.fine_solver_calls,
        "coarse_solver_calls": result.coarse_solver_calls,
        "max_processors_used": result.max_processors_used,
        "processor_usage": list(result.processor_usage),
        "per_iteration_error": [float(e) for e in result.per_iteration_error],
        "boundary_times": [float(t) for t in mesh.boundaries()],
        "boundary_values": [[float(x) for x in row] for row in result.boundary_values],
    }


def solve_csv(result: RunResult, mesh) -> str:
    d = result.boundary_values.shape[1]
    header = ["boundary", "time"] + [f"u{i}" for i in range(d)]
    rows = [
        [a, float(mesh.boundary(a))] + [float(x) for x in result.boundary_values[a]]
        for a in range(result.boundary_values.shape[0])
    ]
    return to_csv(header, rows)


def kdist_payload(dist: KDistribution) -> dict:
    return {
        "kd_reference": dist.kd_reference,
        "n_realizations": dist.n_realizations,
        "failures": dist.failures,
        "beat_probability": dist.beat_probability(),
        "counts": {str(k): c for k, c in sorted(dist.counts.items())},
    }


def kdist_csv(dist: KDistribution) -> str:
    rows: "list[list]" = [
        [k, c, c / dist.n_realizations] for k, c in sorted(dist.counts.items())
    ]
    if dist.failures:
        rows.append(["failed", dist.failures, dist.failures / dist.n_realizations])
    return to_csv(["k", "count", "probability"], rows)


def curve_payload(points) -> dict:
    return {
        "points": [
            {"M": p.n_samples, "expectation": p.expectation, "sd": p.std_dev}
            for p in points
        ]
    }


def curve_csv(points) -> str:
    return to_csv(
        ["M", "expectation", "sd"],
        [[p.n_samples, p.expectation, p.std_dev] for p in points],
    )


def sweep_payload(entries) -> dict:
    return {
        "entries": [
            {
                "total_coarse_steps": e.total_coarse_steps,
                "coarse_step": e.coarse_step,
                "kd": e.kd_reference,
                "M": e.n_samples,
                "beat_probability": e.beat_probability,
                "failures": e.failures,
            }
            for e in entries
        ]
    }


def sweep_csv(entries) -> str:
    return to_csv(
        ["total_coarse_steps", "coarse_step", "kd", "M", "beat_probability", "failures"],
        [
            [e.total_coarse_steps, e.coarse_step, e.kd_reference, e.n_samples,
             e.beat_probability, e.failures]
            for e in entries
        ],
    )


def errors_payload(profile: ErrorProfile) -> dict:
    return {
        "times": [float(t) for t in profile.times],
        "mean_abs_error": [[float(x) for x in row] for row in profile.mean_abs_error],
        "two_sd": [[float(x) for x in row] for row in profile.sd_band],
        "parareal_error": [[float(x) for x in row] for row in profile.parareal_error],
    }


def errors_csv(profile: ErrorProfile) -> str:
    d = profile.mean_abs_error.shape[1]
    rows = [
        [float(profile.times[i]), c, float(profile.mean_abs_error[i, c]),
         float(profile.sd_band[i, c]), float(profile.parareal_error[i, c])]
        for i in range(profile.times.shape[0])
        for c in range(d)
    ]
    return to_csv(
        ["time", "component", "mean_abs_error", "two_sd", "parareal_error"], rows
    )


# ---------------------------------------------------------------------------
# Argument parsing.

def _int_list(text: str) -> "list[int]":
    try:
        values = [int(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a comma-separated integer list: {text!r}")
    if not values:
        raise argparse.ArgumentTypeError("empty list")
    return values


def _default_seed() -> int:
    return int(os.environ.get("PINT_SEED", "0"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pintsol",
        description="Parallel-in-time ODE solving with ensemble acceleration.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    try:
        seed_default = _default_seed()
    except ValueError:
        seed_default = None  # force a usage error below

    def add_common(p: argparse.ArgumentParser, with_problem: bool = True) -> None:
        if with_problem:
            p.add_argument("--problem", required=True, choices=PROBLEM_NAMES,
                           help="benchmark system to solve")
        p.add_argument("--tolerance", type=float, default=None,
                       help="override the benchmark's stopping tolerance")
        p.add_argument("--max-iterations", type=int, default=None,
                       help="iteration cap (default: number of sub-intervals)")
        p.add_argument("--seed", type=int, default=seed_default,
                       help="RNG seed / first realization seed "
                            "(default: $PINT_SEED or 0)")
        p.add_argument("--workers", type=int, default=1,
                       help="worker hint for concurrent realizations; "
                            "never changes results")
        p.add_argument("--output", default=None,
                       help="write results to this file instead of stdout")
        p.add_argument("--format", choices=["csv", "json"], default=None,
                       help="output format (default: json for solve, csv otherwise)")
        p.add_argument("--plot", action="store_true",
                       help="also render a figure next to --output")

    def add_sampling(p: argparse.ArgumentParser, default_samples=None) -> None:
        p.add_argument("--samples", type=int, default=default_samples,
                       help="ensemble size per unconverged sub-interval")
        p.add_argument("--rule", type=int, choices=[1, 2, 3, 4], default=None,
                       help="sampling rule (1-2 Gaussian, 3-4 copula; "
                            "odd rules center on the fine value)")
        p.add_argument("--no-correlations", action="store_true",
                       help="sample components independently")

    p_solve = sub.add_parser("solve", help="run one solver on one benchmark")
    p_solve.add_argument("--solver", choices=["parareal", "stochastic"],
                         default="parareal")
    add_common(p_solve)
    add_sampling(p_solve)

    p_mc = sub.add_parser("mc", help="estimate the iteration-count distribution")
    add_common(p_mc)
    add_sampling(p_mc, default_samples=2)
    p_mc.add_argument("--realizations", type=int, default=200)

    p_curve = sub.add_parser("curve", help="expected iterations vs ensemble size")
    add_common(p_curve)
    p_curve.add_argument("--samples", type=_int_list, required=True,
                         help="comma-separated ensemble sizes, e.g. 1,3,10")
    p_curve.add_argument("--rule", type=int, choices=[1, 2, 3, 4], default=None)
    p_curve.add_argument("--no-correlations", action="store_true")
    p_curve.add_argument("--realizations", type=int, default=200)

    p_sweep = sub.add_parser(
        "sweep", help="beat probability across coarse-grid resolutions "
                      "(analytic benchmark)")
    add_common(p_sweep, with_problem=False)
    p_sweep.add_argument("--coarse-steps", type=_int_list, default=[20, 40, 60],
                         help="comma-separated totals of coarse steps")
    p_sweep.add_argument("--samples", type=_int_list, default=[2, 3, 5])
    p_sweep.add_argument("--rule", type=int, choices=[1, 2, 3, 4], default=None)
    p_sweep.add_argument("--no-correlations", action="store_true")
    p_sweep.add_argument("--realizations", type=int, default=200)

    p_err = sub.add_parser("errors", help="accuracy against the serial fine solution")
    add_common(p_err)
    add_sampling(p_err, default_samples=2)
    p_err.add_argument("--realizations", type=int, default=200)

    return parser


def parse_args(argv=None) -> argparse.Namespace:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.seed is None:
        parser.error("PINT_SEED must be an integer")
    if args.format is None:
        args.format = "json" if args.command == "solve" else "csv"
    if args.plot and not args.output:
        parser.error("--plot requires --output")
    if getattr(args, "workers", 1) < 1:
        parser.error("--workers must be at least 1")
    if getattr(args, "realizations", 1) < 1:
        parser.error("--realizations must be at least 1")
    if getattr(args, "tolerance", None) is not None and args.tolerance < 0:
        parser.error("--tolerance must be nonnegative")

    samples = getattr(args, "samples", None)
    if isinstance(samples, int) and samples < 1:
        parser.error("--samples must be at least 1")
    if isinstance(samples, list) and any(m < 1 for m in samples):
        parser.error("--samples entries must be at least 1")

    if args.command == "solve" and args.solver == "parareal":
        ignored = [
            name
            for name, given in [
                ("--samples", args.samples is not None),
                ("--rule", args.rule is not None),
                ("--no-correlations", args.no_correlations),
            ]
            if given
        ]
        if ignored:
            print(
                f"warning: {', '.join(ignored)} ignored with --solver parareal",
                file=sys.stderr,
            )
    return args


# ---------------------------------------------------------------------------
# Command implementations.

def _config_overrides(args, samples=None) -> dict:
    overrides: dict = {"seed": args.seed, "workers": args.workers}
    if args.tolerance is not None:
        overrides["tolerance"] = args.tolerance
    if args.max_iterations is not None:
        overrides["max_iterations"] = args.max_iterations
    if samples is not None:
        overrides["n_samples"] = samples
    rule = getattr(args, "rule", None)
    if rule is not None:
        overrides["rule"] = SamplingRule(rule)
    if getattr(args, "no_correlations", False):
        overrides["use_correlations"] = False
    return overrides


def _emit(text: str, args, summary: str) -> None:
    if args.output:
        path = Path(args.output)
        if path.parent and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="\n") as fh:
            fh.write(text)
        print(summary)
    else:
        sys.stdout.write(text)
        print(summary)


def _plot_path(args) -> str:
    return str(Path(args.output).with_suffix(".png"))


def _cmd_solve(args) -> int:
    case = get_problem(args.problem)
    config = case.config(**_config_overrides(args, samples=args.samples or 1))
    if args.solver == "parareal":
        result = run_parareal(case.system, case.mesh, config)
    else:
        result = run_stochastic_parareal(case.system, case.mesh, config)

    if args.format == "json":
        text = to_json(solve_payload(result, args.problem, case.mesh))
    else:
        text = solve_csv(result, case.mesh)
    summary = (
        f"solver={result.solver} problem={args.problem} "
        f"iterations={result.iterations} converged={str(result.converged).lower()} "
        f"final_error={format_float(result.final_error)}"
    )
    _emit(text, args, summary)
    if args.plot:
        from .report import plot_solution

        plot_solution(result, _plot_path(args))
    return 0 if result.converged else 1


def _cmd_mc(args) -> int:
    case = get_problem(args.problem)
    config = case.config(**_config_overrides(args, samples=args.samples))
    dist = estimate_k_distribution(case, config, args.realizations, base_seed=args.seed)
    text = to_json(kdist_payload(dist)) if args.format == "json" else kdist_csv(dist)
    summary = (
        f"problem={args.problem} kd={dist.kd_reference} "
        f"realizations={dist.n_realizations} "
        f"beat_probability={format_float(dist.beat_probability())} "
        f"failures={dist.failures}"
    )
    _emit(text, args, summary)
    if args.plot:
        from .report import plot_distribution

        plot_distribution(dist, _plot_path(args))
    return 0 if dist.failures == 0 else 1


def _cmd_curve(args) -> int:
    case = get_problem(args.problem)
    rule = SamplingRule(args.rule) if args.rule is not None else SamplingRule.GAUSSIAN_FINE_MEAN
    points = expectation_curve(
        case,
        rule,
        not args.no_correlations,
        args.samples,
        args.realizations,
        base_seed=args.seed,
        workers=args.workers,
    )
    text = to_json(curve_payload(points)) if args.format == "json" else curve_csv(points)
    summary = " ".join(
        f"M={p.n_samples}:E={format_float(p.expectation)}" for p in points
    )
    _emit(text, args, summary)
    if args.plot:
        from .report import plot_curve

        plot_curve(points, _plot_path(args))
    return 0


def _cmd_sweep(args) -> int:
    rule = SamplingRule(args.rule) if args.rule is not None else SamplingRule.GAUSSIAN_FINE_MEAN
    entries = coarse_step_sweep(
        args.coarse_steps,
        rule,
        args.samples,
        args.realizations,
        base_seed=args.seed,
        use_correlations=not args.no_correlations,
        workers=args.workers,
    )
    text = to_json(sweep_payload(entries)) if args.format == "json" else sweep_csv(entries)
    summary = (
        f"entries={len(entries)} "
        f"failures={sum(e.failures for e in entries)}"
    )
    _emit(text, args, summary)
    if args.plot:
        from .report import plot_sweep

        plot_sweep(entries, _plot_path(args))
    return 0 if all(e.failures == 0 for e in entries) else 1


def _cmd_errors(args) -> int:
    case = get_problem(args.problem)
    config = case.config(**_config_overrides(args, samples=args.samples))
    profile = error_profile(case, config, args.realizations, base_seed=args.seed)
    text = (
        to_json(errors_payload(profile))
        if args.format == "json"
        else errors_csv(profile)
    )
    summary = (
        f"problem={args.problem} "
        f"max_band={format_float(float(profile.sd_band.max()))} "
        f"max_mean_error={format_float(float(profile.mean_abs_error.max()))}"
    )
    _emit(text, args, summary)
    if args.plot:
        from .report import plot_error_profile

        plot_error_profile(profile, _plot_path(args))
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "mc": _cmd_mc,
    "curve": _cmd_curve,
    "sweep": _cmd_sweep,
    "errors": _cmd_errors,
}


def main(argv=None) -> int:
    args = parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except BlowUpError as exc:
        print(f"error: solution blew up: {exc}", file=sys.stderr)
        return 1
    except (RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
