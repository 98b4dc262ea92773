"""Benchmark sweeps over control cost, oscillation and goal pose.

Builds sweep plans, runs every episode of a plan against a fitted model,
selects the highest control cost meeting the required accuracy and writes
summary tables and plots.
"""

import csv
import logging
import math
import sys
from collections import defaultdict
from collections.abc import Iterable, Mapping
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

import numpy as np
from pydantic import ValidationError

from oscillating_grasp.config import get_config
from oscillating_grasp.controllers import PreparedController, prepare
from oscillating_grasp.errors import ConfigurationError, InvalidArgumentError, ParseError
from oscillating_grasp.metrics import evaluate
from oscillating_grasp.mixture import ModelBundle, load_model
from oscillating_grasp.models import (
    RESULT_FIELDS,
    AmplitudeLevel,
    Axis,
    CostSpec,
    Method,
    OscillationSpec,
    Pose6,
    ResultRow,
    SweepPlan,
    SystemModel,
)
from oscillating_grasp.plotting import accuracy_figure, distance_figure, write_figure
from oscillating_grasp.sim import EpisodeConfig, run_episode

logger = logging.getLogger(__name__)

STATIC_AXIS = "none"
METHOD_ORDER = list(Method)
AXIS_ORDER = [STATIC_AXIS, *(a.value for a in Axis)]
LEVEL_ORDER = list(AmplitudeLevel)
GROUP_ORDER = ("none", "orientation", "position")
Z_95 = 1.96


def goal_poses_from_config() -> tuple[Pose6, ...]:
    """Central goal followed by its single-dimension variants."""
    config = get_config()
    central = np.array(config.goal_pose)
    goals = [Pose6.from_array(central)]
    for dim, offset in config.goal_variants:
        variant = central.copy()
        variant[dim] += offset
        goals.append(Pose6.from_array(variant))
    return tuple(goals)


def default_plan() -> SweepPlan:
    """Full grid: every method, control cost, axis, amplitude level and goal."""
    config = get_config()
    return SweepPlan(
        methods=tuple(Method),
        rhos=config.rho_grid,
        axes=tuple(Axis),
        amplitude_levels=tuple(AmplitudeLevel),
        position_amplitudes=config.position_amplitudes,  # type: ignore[arg-type]
        orientation_amplitudes=config.orientation_amplitudes,  # type: ignore[arg-type]
        goal_poses=goal_poses_from_config(),
        start_pose=Pose6.from_array(config.start_pose),
        dt=config.dt,
        horizon=config.horizon,
        frequency=config.oscillation_frequency,
    )


def apple_plan() -> SweepPlan:
    """Fruit-picking emulation: a damped target released at an extreme of its swing.

    DualLQR only, non-positive control costs, medium sideways sway coupled with
    a medium roll, phase pi/2 and decay > 0.
    """
    base = default_plan()
    return base.model_copy(
        update={
            "methods": (Method.DUAL_LQR,),
            "rhos": tuple(r for r in base.rhos if r <= 0.0),
            "axes": (Axis.X,),
            "coupled_axes": (Axis.ROLL,),
            "amplitude_levels": (AmplitudeLevel.MEDIUM,),
            "decay": get_config().apple_decay,
            "phase": math.pi / 2,
        }
    )


def load_plan(path: Path, base: SweepPlan | None = None) -> SweepPlan:
    """Override a plan with the [plan] table of a TOML file.

    Keys mirror SweepPlan fields; poses are written as six numbers.
    """
    if not path.exists():
        raise FileNotFoundError(f"Plan file not found: {path}")
    with open(path, "rb") as f:
        try:
            table = tomllib.load(f).get("plan", {})
        except tomllib.TOMLDecodeError as exc:
            raise ParseError(str(exc), path=str(path)) from None
    overrides: dict[str, Any] = dict(table)
    if "goal_poses" in overrides:
        overrides["goal_poses"] = tuple(Pose6.from_array(p) for p in overrides["goal_poses"])
    if "start_pose" in overrides:
        overrides["start_pose"] = Pose6.from_array(overrides["start_pose"])
    return override_plan(base or default_plan(), overrides)


def override_plan(plan: SweepPlan, overrides: Mapping[str, Any]) -> SweepPlan:
    """Validated copy of a plan with some fields replaced."""
    unknown = set(overrides) - set(SweepPlan.model_fields)
    if unknown:
        raise ConfigurationError(f"unknown plan fields: {', '.join(sorted(unknown))}")
    try:
        return SweepPlan.model_validate({**dict(plan), **overrides})
    except ValidationError as exc:
        raise ConfigurationError(str(exc)) from None


@dataclass(frozen=True)
class EpisodeSpec:
    """Factor levels of one sweep episode."""

    method: Method
    rho: float
    axis: str
    level: AmplitudeLevel
    goal_id: int
    seed: int

    @property
    def sort_key(self) -> tuple[int, float, int, int, int, int]:
        """Canonical output order."""
        return _sort_key(self.method, self.rho, self.axis, self.level, self.goal_id, self.seed)


def _sort_key(
    method: Method, rho: float, axis: str, level: AmplitudeLevel, goal_id: int, seed: int
) -> tuple[int, float, int, int, int, int]:
    return (
        METHOD_ORDER.index(method),
        rho,
        AXIS_ORDER.index(axis),
        LEVEL_ORDER.index(level),
        goal_id,
        seed,
    )


def plan_episodes(plan: SweepPlan) -> list[EpisodeSpec]:
    """Every episode of a plan in canonical order.

    The 'none' amplitude level runs once as a static target instead of once per axis.
    """
    conditions: list[tuple[str, AmplitudeLevel]] = []
    if AmplitudeLevel.NONE in plan.amplitude_levels:
        conditions.append((STATIC_AXIS, AmplitudeLevel.NONE))
    for axis in plan.axes:
        for level in plan.amplitude_levels:
            if level is not AmplitudeLevel.NONE:
                conditions.append((axis.value, level))
    episodes = [
        EpisodeSpec(method, rho, axis, level, goal_id, seed)
        for method in plan.methods
        for rho in plan.rhos
        for axis, level in conditions
        for goal_id in range(len(plan.goal_poses))
        for seed in plan.seeds
    ]
    return sorted(episodes, key=lambda e: e.sort_key)


def _oscillations(
    plan: SweepPlan, spec: EpisodeSpec
) -> tuple[OscillationSpec, tuple[OscillationSpec, ...]]:
    if spec.axis == STATIC_AXIS:
        return OscillationSpec.static(), ()

    def along(axis: Axis) -> OscillationSpec:
        return OscillationSpec(
            axis=axis,
            amplitude=plan.amplitude_for(axis, spec.level),
            frequency=plan.frequency,
            phase=0.0 if plan.phase is None else plan.phase,
            decay=plan.decay,
        )

    primary = Axis(spec.axis)
    extras = tuple(along(a) for a in plan.coupled_axes if a is not primary)
    return along(primary), extras


def run_one(plan: SweepPlan, controller: PreparedController, spec: EpisodeSpec) -> ResultRow:
    """Run and score a single sweep episode."""
    oscillation, extras = _oscillations(plan, spec)
    config = EpisodeConfig(
        start_pose=plan.start_pose,
        goal_pose=plan.goal_poses[spec.goal_id],
        controller=controller,
        oscillation=oscillation,
        extra_oscillations=extras,
        dt=plan.dt,
        horizon=plan.horizon,
        velocity_clamp=plan.velocity_clamp,
        latency_ticks=plan.latency_ticks,
        random_phase=plan.phase is None,
        seed=spec.seed,
    )
    metrics = evaluate(run_episode(config))
    logger.debug(
        "%s rho=%s %s/%s goal %d: accuracy %.3f",
        spec.method,
        spec.rho,
        spec.axis,
        spec.level,
        spec.goal_id,
        metrics.final_approach_accuracy,
    )
    return ResultRow(
        method=spec.method,
        rho=spec.rho,
        axis=spec.axis,
        amplitude_level=spec.level,
        goal_id=spec.goal_id,
        seed=spec.seed,
        accuracy=metrics.final_approach_accuracy,
        translation_m=metrics.translation_m,
        rotation_rad=metrics.rotation_rad,
        grasp_time_s=metrics.grasp_time_s,
        never_arrived=metrics.never_arrived,
    )


def sweep(
    plan: SweepPlan,
    model: ModelBundle | Path,
    threads: int = 1,
    out: Path | None = None,
) -> list[ResultRow]:
    """Run every episode of a plan.

    Controllers are prepared once per (method, rho) and shared read-only by the
    worker threads. Rows come back in canonical order whatever the thread count.

    Args:
        plan: Sweep factors
        model: Fitted model or path to a model file
        threads: Worker threads
        out: Optional results CSV to write

    Returns:
        One ResultRow per episode

    Raises:
        ConfigurationError: The model does not have a start and an end frame
    """
    if threads < 1:
        raise InvalidArgumentError(f"threads must be at least 1, got {threads}")
    bundle = load_model(model) if isinstance(model, Path) else model
    if bundle.joint.n_frames != 2:
        raise ConfigurationError(
            f"sweeps need a model with a start and an end frame, got {bundle.joint.n_frames} frames"
        )
    system = SystemModel(dt=plan.dt)
    controllers = {
        (method, rho): prepare(method, bundle.joint, CostSpec(rho=rho), system, bundle.horizon)
        for method in plan.methods
        for rho in plan.rhos
    }
    episodes = plan_episodes(plan)
    logger.info("Running %d episodes on %d thread(s)", len(episodes), threads)

    with ThreadPoolExecutor(max_workers=threads) as pool:
        rows = list(pool.map(lambda e: run_one(plan, controllers[(e.method, e.rho)], e), episodes))
    rows.sort(
        key=lambda r: _sort_key(r.method, r.rho, r.axis, r.amplitude_level, r.goal_id, r.seed)
    )

    accuracy: dict[tuple[Method, float], list[float]] = defaultdict(list)
    for row in rows:
        accuracy[(row.method, row.rho)].append(row.accuracy)
    for (method, rho), values in accuracy.items():
        logger.info(
            "%s rho=%+.1f: mean accuracy %.3f over %d episodes",
            method,
            rho,
            np.mean(values),
            len(values),
        )

    if out is not None:
        write_results(rows, out)
    return rows


def write_results(rows: Iterable[ResultRow], path: Path) -> None:
    """Write rows under the fixed results header."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(RESULT_FIELDS)
        for row in rows:
            writer.writerow(row.to_csv_row())
    logger.info("Wrote results to %s", path)


def read_results(path: Path) -> list[ResultRow]:
    """Parse a results CSV written by write_results."""
    if not path.exists():
        raise FileNotFoundError(f"Results file not found: {path}")
    rows = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != RESULT_FIELDS:
            raise ParseError(f"header must be {','.join(RESULT_FIELDS)}", path=str(path), line=1)
        for line_no, record in enumerate(reader, start=2):
            if len(record) != len(RESULT_FIELDS):
                raise ParseError(
                    f"row has {len(record)} columns, expected {len(RESULT_FIELDS)}",
                    path=str(path),
                    line=line_no,
                )
            values: dict[str, Any] = dict(zip(RESULT_FIELDS, record, strict=True))
            if values["grasp_time_s"] == "":
                values["grasp_time_s"] = None
            if values["never_arrived"] not in ("true", "false"):
                raise ParseError(
                    f"'{values['never_arrived']}' is not true/false",
                    path=str(path),
                    line=line_no,
                    field="never_arrived",
                )
            try:
                rows.append(ResultRow.model_validate(values))
            except ValidationError as exc:
                first = exc.errors()[0]
                raise ParseError(
                    first["msg"],
                    path=str(path),
                    line=line_no,
                    field=".".join(str(p) for p in first["loc"]),
                ) from None
    return rows


def parse_condition(condition: str) -> tuple[AmplitudeLevel, str]:
    """Split 'level/group' (e.g. 'high/orientation'); 'none' is the static target."""
    level_name, _, group = condition.partition("/")
    try:
        level = AmplitudeLevel(level_name)
    except ValueError:
        raise InvalidArgumentError(f"unknown amplitude level in condition '{condition}'") from None
    if level is AmplitudeLevel.NONE:
        return level, "none"
    if group not in ("position", "orientation"):
        raise InvalidArgumentError(f"condition '{condition}' needs a position or orientation group")
    return level, group


def select_best(
    rows: list[ResultRow],
    threshold: float | None = None,
    conditions: Mapping[str, str] | str | None = None,
) -> dict[Method, float | None]:
    """Highest control cost per method whose mean accuracy meets the threshold.

    Accuracy is averaged over goals (and axes, seeds) within the method's
    selection condition.

    Args:
        rows: Sweep results
        threshold: Required accuracy in (0, 1], defaults to the configured value
        conditions: 'level/group' per method name, or one condition for all
            methods; defaults to the configured selection conditions

    Returns:
        Best rho per method present in rows, None when no rho qualifies
    """
    if not rows:
        raise InvalidArgumentError("no result rows to select from")
    if threshold is None:
        threshold = get_config().required_accuracy
    if not 0 < threshold <= 1:
        raise InvalidArgumentError(f"threshold must be in (0, 1], got {threshold}")
    if conditions is None:
        conditions = get_config().selection_conditions

    best: dict[Method, float | None] = {}
    for method in METHOD_ORDER:
        method_rows = [r for r in rows if r.method is method]
        if not method_rows:
            continue
        if isinstance(conditions, str):
            condition = conditions
        else:
            condition = conditions.get(method.value, "none")
        level, group = parse_condition(condition)
        by_rho: dict[float, list[float]] = defaultdict(list)
        for r in method_rows:
            if r.amplitude_level is level and r.group == group:
                by_rho[r.rho].append(r.accuracy)
        qualifying = [rho for rho, acc in by_rho.items() if float(np.mean(acc)) >= threshold]
        best[method] = max(qualifying) if qualifying else None
    return best


def confidence_interval(values: Iterable[float]) -> tuple[float, float]:
    """Mean and 95% half-width 1.96 * sd / sqrt(n) (sample sd; 0 for one value)."""
    arr = np.asarray(list(values), dtype=np.float64)
    if arr.size == 0:
        raise InvalidArgumentError("no values")
    if arr.size == 1:
        return float(arr[0]), 0.0
    return float(arr.mean()), Z_95 * float(arr.std(ddof=1)) / math.sqrt(arr.size)


@dataclass(frozen=True)
class SummaryPoint:
    """Mean and 95% half-width of the metrics of one (method, rho, group, level) cell."""

    method: Method
    rho: float
    group: str
    level: AmplitudeLevel
    n: int
    accuracy: tuple[float, float]
    translation: tuple[float, float]
    rotation: tuple[float, float]


def summarize(rows: Iterable[ResultRow]) -> list[SummaryPoint]:
    """Aggregate rows per (method, rho, group, level) in canonical order."""
    cells: dict[tuple[Method, float, str, AmplitudeLevel], list[ResultRow]] = defaultdict(list)
    for r in rows:
        cells[(r.method, r.rho, r.group, r.amplitude_level)].append(r)
    keys = sorted(
        cells,
        key=lambda k: (
            METHOD_ORDER.index(k[0]),
            k[1],
            GROUP_ORDER.index(k[2]),
            LEVEL_ORDER.index(k[3]),
        ),
    )
    return [
        SummaryPoint(
            method=k[0],
            rho=k[1],
            group=k[2],
            level=k[3],
            n=len(cells[k]),
            accuracy=confidence_interval(r.accuracy for r in cells[k]),
            translation=confidence_interval(r.translation_m for r in cells[k]),
            rotation=confidence_interval(r.rotation_rad for r in cells[k]),
        )
        for k in keys
    ]


TABLE_CONDITIONS: tuple[tuple[AmplitudeLevel, str], ...] = (
    (AmplitudeLevel.NONE, "none"),
    (AmplitudeLevel.LOW, "orientation"),
    (AmplitudeLevel.LOW, "position"),
    (AmplitudeLevel.MEDIUM, "orientation"),
    (AmplitudeLevel.MEDIUM, "position"),
    (AmplitudeLevel.HIGH, "orientation"),
    (AmplitudeLevel.HIGH, "position"),
)


def _fmt(stat: tuple[float, float]) -> str:
    return f"{stat[0]:.2f}±{stat[1]:.2f}"


def summary_table(rows: list[ResultRow], selected: Mapping[Method, float | None]) -> str:
    """Plain-text table of accuracy and travel per oscillation condition.

    Each method is shown at its selected control cost, or at its lowest control
    cost when none qualified.
    """
    points = summarize(rows)
    methods = [m for m in METHOD_ORDER if any(p.method is m for p in points)]
    shown: dict[Method, float] = {}
    for m in methods:
        choice = selected.get(m)
        shown[m] = choice if choice is not None else min(p.rho for p in points if p.method is m)

    lookup = {(p.method, p.rho, p.group, p.level): p for p in points}
    head = f"{'Oscillation':<22}" + "".join(
        f"{f'{m.value} (rho={shown[m]:+.1f})':<42}" for m in methods
    )
    columns = f"{'accuracy':<12}{'translation m':<15}{'rotation rad':<15}"
    sub = f"{'':<22}" + columns * len(methods)
    lines = [head, sub, "-" * len(sub)]
    for level, group in TABLE_CONDITIONS:
        label = "None" if group == "none" else f"{level.value.title()} {group.title()}"
        cells = []
        for m in methods:
            p = lookup.get((m, shown[m], group, level))
            if p is None:
                cells.append(f"{'-':<12}{'-':<15}{'-':<15}")
            else:
                cells.append(
                    f"{_fmt(p.accuracy):<12}{_fmt(p.translation):<15}{_fmt(p.rotation):<15}"
                )
        lines.append(f"{label:<22}" + "".join(cells))
    return "\n".join(lines) + "\n"


@dataclass
class ReportFiles:
    """Paths written by report."""

    summary: Path
    summary_csv: Path
    figures: list[Path]
    selected: dict[Method, float | None]


def report(
    csv_in: Path,
    out_dir: Path,
    threshold: float | None = None,
    conditions: Mapping[str, str] | str | None = None,
) -> ReportFiles:
    """Summary table, per-cell statistics and accuracy/distance plots of a results CSV."""
    rows = read_results(csv_in)
    if not rows:
        raise ParseError("results file has no rows", path=str(csv_in))
    if threshold is None:
        threshold = get_config().required_accuracy
    selected = select_best(rows, threshold, conditions)
    out_dir.mkdir(parents=True, exist_ok=True)

    picks = "\n".join(
        f"{m.value}: best rho = {'none' if rho is None else f'{rho:+.1f}'}"
        for m, rho in selected.items()
    )
    summary_path = out_dir / "summary.txt"
    table = summary_table(rows, selected)
    summary_path.write_text(f"Required accuracy {threshold}\n{picks}\n\n{table}")

    points = summarize(rows)
    summary_csv = out_dir / "summary.csv"
    with open(summary_csv, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(
            ["method", "rho", "group", "amplitude_level", "n", "accuracy_mean", "accuracy_ci95",
             "translation_mean", "translation_ci95", "rotation_mean", "rotation_ci95"]
        )  # fmt: skip
        for p in points:
            writer.writerow(
                [p.method.value, repr(p.rho), p.group, p.level.value, str(p.n),
                 *(repr(v) for v in (*p.accuracy, *p.translation, *p.rotation))]
            )  # fmt: skip

    figures: list[Path] = []
    for method in METHOD_ORDER:
        method_points = [p for p in points if p.method is method]
        if not method_points:
            continue
        groups = sorted({p.group for p in method_points if p.group != "none"}) or ["none"]
        for group in groups:
            selection = [p for p in method_points if p.group in (group, "none")]
            if group == "none":
                title = f"{method.value}, static target"
            else:
                title = f"{method.value}, {group} oscillation"
            stem = f"{method.value}_{group}"
            accuracy = accuracy_figure(selection, title, threshold)
            figures += write_figure(accuracy, out_dir / f"{stem}_accuracy")
            figures += write_figure(distance_figure(selection, title), out_dir / f"{stem}_distance")
    logger.info("Report written to %s (%d figure files)", out_dir, len(figures))
    return ReportFiles(
        summary=summary_path, summary_csv=summary_csv, figures=figures, selected=selected
    )
