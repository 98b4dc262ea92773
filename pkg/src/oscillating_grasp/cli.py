"""Command-line entry point: gen, fit, run, sweep, report and select."""

import argparse
import logging
import sys
from collections.abc import Sequence
from pathlib import Path
from typing import Any

from pydantic import ValidationError

from oscillating_grasp.bench import (
    apple_plan,
    default_plan,
    load_plan,
    override_plan,
    read_results,
    report,
    select_best,
    sweep,
)
from oscillating_grasp.config import get_config, use_config
from oscillating_grasp.controllers import prepare
from oscillating_grasp.demos import load_set, save_set, synth_demos
from oscillating_grasp.errors import (
    ConfigurationError,
    InvalidArgumentError,
    NumericalSingularityError,
    ParseError,
    SingularDataError,
    UnsupportedConfigurationError,
)
from oscillating_grasp.metrics import evaluate
from oscillating_grasp.mixture import fit_model, load_model, save_model
from oscillating_grasp.models import (
    AmplitudeLevel,
    Axis,
    CostSpec,
    Method,
    OscillationSpec,
    SystemModel,
)
from oscillating_grasp.sim import EpisodeConfig, latency_ticks_from_ms, run_episode, save_log

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3

_CONFIG_ERRORS = (
    ConfigurationError,
    InvalidArgumentError,
    ParseError,
    UnsupportedConfigurationError,
    ValidationError,
    FileNotFoundError,
)
_NUMERICAL_ERRORS = (NumericalSingularityError, SingularDataError)


def _add_episode_options(parser: argparse.ArgumentParser, many: bool) -> None:
    """Oscillation and timing flags shared by run and sweep."""
    action = "append" if many else "store"
    parser.add_argument("--rho", type=float, action=action, help="Control cost exponent")
    parser.add_argument("--axis", choices=[a.value for a in Axis], action=action)
    parser.add_argument("--amplitude", choices=[lv.value for lv in AmplitudeLevel], action=action)
    parser.add_argument("--goal-index", type=int, action=action, help="Index into the goal list")
    parser.add_argument("--dt", type=float, help="Control period in seconds")
    parser.add_argument("--horizon", type=int, help="Ticks per episode")
    parser.add_argument("--freq", type=float, help="Oscillation frequency in Hz")
    parser.add_argument("--decay", type=float, help="Oscillation decay rate in 1/s")
    parser.add_argument("--phase", type=float, help="Oscillation phase in radians")
    parser.add_argument("--latency-ticks", type=int, help="Sensing delay in ticks")
    parser.add_argument(
        "--latency", action="store_true", help="Apply the configured sensing latency"
    )
    parser.add_argument(
        "--seed", type=int, help="Episode seed; without --phase it draws the oscillation phase"
    )


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per operation."""
    parser = argparse.ArgumentParser(
        prog="oscillating-grasp",
        description="Learning-from-demonstration controllers for oscillating targets",
    )
    parser.add_argument("--config", type=Path, help="TOML file replacing defaults.toml")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="Debug logging")
    verbosity.add_argument("-q", "--quiet", action="store_true", help="Warnings only")
    commands = parser.add_subparsers(dest="command", required=True)

    gen = commands.add_parser("gen", help="Generate a synthetic demonstration set")
    gen.add_argument("--out", type=Path, required=True, help="Dataset directory")
    gen.add_argument("--n", type=int, help="Number of demonstrations")
    gen.add_argument("--seed", type=int, help="Generator seed")

    fit = commands.add_parser("fit", help="Fit a model to a demonstration set")
    fit.add_argument("dataset", type=Path, help="Dataset directory or manifest")
    fit.add_argument("--out", type=Path, required=True, help="Model file")
    fit.add_argument("--components", type=int, help="Number of Gaussian components")
    fit.add_argument("--seed", type=int, help="EM seed")

    run = commands.add_parser("run", help="Run one episode")
    run.add_argument("--model", type=Path, required=True)
    run.add_argument("--method", choices=[m.value for m in Method], default=Method.DUAL_LQR.value)
    run.add_argument("--out", type=Path, help="Episode log CSV")
    _add_episode_options(run, many=False)

    sweep_cmd = commands.add_parser("sweep", help="Run a benchmark sweep")
    sweep_cmd.add_argument("--model", type=Path, required=True)
    sweep_cmd.add_argument("--out", type=Path, required=True, help="Results CSV")
    sweep_cmd.add_argument("--plan", type=Path, help="TOML file with a [plan] table")
    sweep_cmd.add_argument(
        "--apple", action="store_true", help="Start from the decaying-oscillation plan"
    )
    sweep_cmd.add_argument("--method", choices=[m.value for m in Method], action="append")
    sweep_cmd.add_argument("--repetitions", type=int)
    sweep_cmd.add_argument("--threads", type=int, default=1)
    _add_episode_options(sweep_cmd, many=True)

    report_cmd = commands.add_parser("report", help="Summarize a results CSV")
    report_cmd.add_argument("results", type=Path)
    report_cmd.add_argument("--out", type=Path, required=True, help="Output directory")
    report_cmd.add_argument("--threshold", type=float, help="Required accuracy")
    report_cmd.add_argument("--condition", help="'level/group' used for every method")

    select = commands.add_parser("select", help="Best control cost per method")
    select.add_argument("results", type=Path)
    select.add_argument("--threshold", type=float, help="Required accuracy")
    select.add_argument("--condition", help="'level/group' used for every method")
    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def _latency_ticks(args: argparse.Namespace, dt: float) -> int | None:
    if args.latency_ticks is not None:
        return int(args.latency_ticks)
    if args.latency:
        return latency_ticks_from_ms(get_config().latency_ms, dt)
    return None


def cmd_gen(args: argparse.Namespace) -> int:
    """Write a synthetic demonstration set."""
    config = get_config()
    n = config.n_demos if args.n is None else args.n
    seed = config.synth_seed if args.seed is None else args.seed
    manifest = save_set(synth_demos(n, seed), args.out)
    print(f"Wrote {n} demonstrations to {manifest}")
    return EXIT_OK


def cmd_fit(args: argparse.Namespace) -> int:
    """Fit and save a model."""
    bundle = fit_model(load_set(args.dataset), args.components, args.seed)
    save_model(bundle, args.out)
    joint = bundle.joint
    print(
        f"Fitted {joint.n_components} components over {joint.n_frames} frames "
        f"({len(joint.log_likelihood)} EM iterations, converged={joint.converged})"
    )
    return EXIT_OK


def cmd_run(args: argparse.Namespace) -> int:
    """Run one episode and print its metrics."""
    bundle = load_model(args.model)
    plan = default_plan()
    dt = plan.dt if args.dt is None else args.dt
    goal_index = 0 if args.goal_index is None else args.goal_index
    if not 0 <= goal_index < len(plan.goal_poses):
        raise InvalidArgumentError(
            f"goal index {goal_index} outside 0..{len(plan.goal_poses) - 1}"
        )

    level = AmplitudeLevel(args.amplitude or AmplitudeLevel.NONE.value)
    axis = Axis(args.axis or Axis.X.value)
    oscillation = OscillationSpec(
        axis=axis,
        amplitude=plan.amplitude_for(axis, level),
        frequency=plan.frequency if args.freq is None else args.freq,
        phase=0.0 if args.phase is None else args.phase,
        decay=0.0 if args.decay is None else args.decay,
    )
    method = Method(args.method)
    cost = CostSpec(rho=0.0 if args.rho is None else args.rho)
    controller = prepare(method, bundle.joint, cost, SystemModel(dt=dt), bundle.horizon)
    config = EpisodeConfig(
        start_pose=plan.start_pose,
        goal_pose=plan.goal_poses[goal_index],
        controller=controller,
        oscillation=oscillation,
        dt=dt,
        horizon=plan.horizon if args.horizon is None else args.horizon,
        latency_ticks=_latency_ticks(args, dt) or 0,
        random_phase=args.seed is not None and args.phase is None,
        seed=0 if args.seed is None else args.seed,
    )
    log = run_episode(config)
    if args.out is not None:
        save_log(log, args.out)

    metrics = evaluate(log)
    grasp = "never" if metrics.grasp_time_s is None else f"{metrics.grasp_time_s:.2f} s"
    print(f"{method.value} rho={cost.rho:+.1f} {axis.value}/{level.value} goal {goal_index}")
    print(f"  final approach accuracy: {metrics.final_approach_accuracy:.3f}")
    print(f"  approach ticks:          {metrics.approach_tick_count}")
    print(f"  translation:             {metrics.translation_m:.3f} m")
    print(f"  rotation:                {metrics.rotation_rad:.3f} rad")
    print(f"  grasp time:              {grasp}")
    return EXIT_OK


def _sweep_overrides(args: argparse.Namespace, goal_count: int) -> dict[str, Any]:
    overrides: dict[str, Any] = {}
    if args.method:
        overrides["methods"] = tuple(Method(m) for m in args.method)
    if args.rho:
        overrides["rhos"] = tuple(args.rho)
    if args.axis:
        overrides["axes"] = tuple(Axis(a) for a in args.axis)
    if args.amplitude:
        overrides["amplitude_levels"] = tuple(AmplitudeLevel(a) for a in args.amplitude)
    for flag, name in (
        ("dt", "dt"),
        ("horizon", "horizon"),
        ("freq", "frequency"),
        ("decay", "decay"),
        ("phase", "phase"),
        ("seed", "seed"),
        ("repetitions", "repetitions"),
    ):
        value = getattr(args, flag)
        if value is not None:
            overrides[name] = value
    if args.goal_index:
        bad = [i for i in args.goal_index if not 0 <= i < goal_count]
        if bad:
            raise InvalidArgumentError(f"goal indices {bad} outside 0..{goal_count - 1}")
    return overrides


def cmd_sweep(args: argparse.Namespace) -> int:
    """Run a sweep plan and write the results CSV."""
    plan = apple_plan() if args.apple else default_plan()
    if args.plan is not None:
        plan = load_plan(args.plan, plan)
    plan = override_plan(plan, _sweep_overrides(args, len(plan.goal_poses)))
    if args.goal_index:
        plan = override_plan(
            plan, {"goal_poses": tuple(plan.goal_poses[i] for i in args.goal_index)}
        )
    latency = _latency_ticks(args, plan.dt)
    if latency is not None:
        plan = override_plan(plan, {"latency_ticks": latency})

    rows = sweep(plan, args.model, threads=args.threads, out=args.out)
    print(f"Wrote {len(rows)} rows to {args.out}")
    return EXIT_OK


def cmd_report(args: argparse.Namespace) -> int:
    """Write the summary table and plots of a results CSV."""
    files = report(args.results, args.out, args.threshold, args.condition)
    print(files.summary.read_text())
    print(f"Wrote {files.summary}, {files.summary_csv} and {len(files.figures)} figure files")
    return EXIT_OK


def cmd_select(args: argparse.Namespace) -> int:
    """Print the best control cost of every method."""
    best = select_best(read_results(args.results), args.threshold, args.condition)
    for method, rho in best.items():
        print(f"{method.value}: {'none' if rho is None else f'{rho:+.1f}'}")
    return EXIT_OK


_COMMANDS = {
    "gen": cmd_gen,
    "fit": cmd_fit,
    "run": cmd_run,
    "sweep": cmd_sweep,
    "report": cmd_report,
    "select": cmd_select,
}


def main(argv: Sequence[str] | None = None) -> int:
    """Parse arguments, run the subcommand and map failures to exit codes.

    Returns:
        0 on success, 2 for configuration, argument and file errors, 3 for
        numerical failures
    """
    args = build_parser().parse_args(argv)
    _configure_logging(args)
    try:
        if args.config is not None:
            use_config(args.config)
        return _COMMANDS[args.command](args)
    except _CONFIG_ERRORS as exc:
        logger.error("%s", exc)
        return EXIT_CONFIG
    except _NUMERICAL_ERRORS as exc:
        logger.error("Numerical failure: %s", exc)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
