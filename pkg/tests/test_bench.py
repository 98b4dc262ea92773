"""Tests for sweep plans, result files, selection and reports."""

import math
from pathlib import Path

import numpy as np
import pytest

from oscillating_grasp.bench import (
    EpisodeSpec,
    _oscillations,
    apple_plan,
    confidence_interval,
    default_plan,
    goal_poses_from_config,
    load_plan,
    override_plan,
    parse_condition,
    plan_episodes,
    read_results,
    report,
    select_best,
    summarize,
    summary_table,
    sweep,
    write_results,
)
from oscillating_grasp.errors import ConfigurationError, InvalidArgumentError, ParseError
from oscillating_grasp.mixture import JointGMM, ModelBundle, save_model
from oscillating_grasp.models import AmplitudeLevel, Axis, Method, Pose6, ResultRow, SweepPlan
from tests.conftest import frame_gmm


def row(
    method: Method,
    rho: float,
    axis: str,
    level: AmplitudeLevel,
    accuracy: float,
    goal_id: int = 0,
    translation: float = 0.5,
) -> ResultRow:
    """Result row with plausible travel values."""
    return ResultRow(
        method=method,
        rho=rho,
        axis=axis,
        amplitude_level=level,
        goal_id=goal_id,
        seed=0,
        accuracy=accuracy,
        translation_m=translation,
        rotation_rad=0.2,
        grasp_time_s=None if accuracy == 0 else 7.5,
        never_arrived=accuracy == 0,
    )


@pytest.fixture
def dual_rows() -> list[ResultRow]:
    """DualLQR under high roll oscillation at three costs, two goals each, plus static runs."""
    rows = []
    for rho, accuracies in ((-0.3, (0.96, 0.94)), (0.0, (0.92, 0.88)), (0.3, (0.6, 0.4))):
        for goal_id, acc in enumerate(accuracies):
            rows.append(row(Method.DUAL_LQR, rho, "roll", AmplitudeLevel.HIGH, acc, goal_id))
            rows.append(row(Method.DUAL_LQR, rho, "none", AmplitudeLevel.NONE, 1.0, goal_id))
    return rows


class TestPlans:
    """Sweep plans."""

    def test_default_plan(self) -> None:
        """Full grid from the configuration."""
        plan = default_plan()
        assert len(plan.rhos) == 21
        assert len(plan.goal_poses) == 11
        assert plan.methods == tuple(Method)
        assert plan.position_amplitudes[2] == 0.15
        assert plan.amplitude_for(Axis.ROLL, AmplitudeLevel.HIGH) == 0.45
        assert plan.amplitude_for(Axis.X, AmplitudeLevel.NONE) == 0.0

    def test_goal_variants(self) -> None:
        """Central goal first, then one dimension changed at a time."""
        goals = goal_poses_from_config()
        central = goals[0].as_array()
        np.testing.assert_allclose(goals[1].as_array() - central, [0.1, 0, 0, 0, 0, 0])
        np.testing.assert_allclose(goals[10].as_array() - central, [0, 0, 0, 0, 0, -0.2])

    def test_full_grid_size(self) -> None:
        """3 methods x 21 costs x 19 conditions x 11 goals."""
        assert len(plan_episodes(default_plan())) == 13167

    def test_static_level_runs_once(self) -> None:
        """The 'none' level is a single static condition."""
        plan = override_plan(
            default_plan(),
            {
                "methods": (Method.DUAL_LQR,),
                "rhos": (0.0,),
                "axes": (Axis.X, Axis.YAW),
                "amplitude_levels": (AmplitudeLevel.NONE,),
            },
        )
        episodes = plan_episodes(plan)
        assert len(episodes) == 11
        assert all(e.axis == "none" for e in episodes)
        assert [e.goal_id for e in episodes] == list(range(11))

    def test_canonical_order(self) -> None:
        """Methods, then rho, then axis with the static condition first."""
        plan = override_plan(
            default_plan(),
            {
                "methods": (Method.DUAL_LQR, Method.INF_LQR),
                "rhos": (0.3, -0.3),
                "axes": (Axis.YAW, Axis.X),
                "amplitude_levels": (AmplitudeLevel.HIGH, AmplitudeLevel.NONE),
                "goal_poses": (Pose6(),),
            },
        )
        keys = [(e.method, e.rho, e.axis) for e in plan_episodes(plan)]
        assert keys[0] == (Method.INF_LQR, -0.3, "none")
        assert keys[1] == (Method.INF_LQR, -0.3, "x")
        assert keys[2] == (Method.INF_LQR, -0.3, "yaw")
        assert keys[-1] == (Method.DUAL_LQR, 0.3, "yaw")

    def test_apple_plan(self) -> None:
        """Decaying sway with a coupled roll, DualLQR at non-positive costs."""
        plan = apple_plan()
        assert plan.methods == (Method.DUAL_LQR,)
        assert max(plan.rhos) == 0.0
        assert len(plan.rhos) == 11
        assert plan.decay == 0.4
        assert plan.phase == pytest.approx(math.pi / 2)

        spec = EpisodeSpec(Method.DUAL_LQR, 0.0, "x", AmplitudeLevel.MEDIUM, 0, 0)
        primary, extras = _oscillations(plan, spec)
        assert primary.axis is Axis.X and primary.amplitude == 0.10
        assert len(extras) == 1
        assert extras[0].axis is Axis.ROLL and extras[0].amplitude == 0.30
        assert extras[0].decay == 0.4

    def test_override_rejects_unknown_field(self) -> None:
        """Typos in overrides are caught."""
        with pytest.raises(ConfigurationError, match="rho_list"):
            override_plan(default_plan(), {"rho_list": (0.0,)})

    def test_override_validates(self) -> None:
        """Overrides go through plan validation."""
        with pytest.raises(ConfigurationError):
            override_plan(default_plan(), {"repetitions": 0})

    def test_load_plan(self, tmp_path: Path) -> None:
        """A [plan] table overrides the base plan."""
        path = tmp_path / "plan.toml"
        path.write_text(
            "[plan]\n"
            "rhos = [0.0, 0.3]\n"
            "repetitions = 2\n"
            "goal_poses = [[0.2, 0.3, -0.2, 0, 0, 1.0]]\n"
        )
        plan = load_plan(path)
        assert plan.rhos == (0.0, 0.3)
        assert plan.seeds == (0, 1)
        assert plan.goal_poses == (Pose6(position=(0.2, 0.3, -0.2), orientation=(0, 0, 1.0)),)
        assert len(plan.methods) == 3

    def test_load_plan_errors(self, tmp_path: Path) -> None:
        """Missing and malformed plan files."""
        with pytest.raises(FileNotFoundError):
            load_plan(tmp_path / "none.toml")
        bad = tmp_path / "bad.toml"
        bad.write_text("[plan\nrhos = 1\n")
        with pytest.raises(ParseError):
            load_plan(bad)


class TestSelection:
    """Best control cost."""

    def test_highest_qualifying_rho(self, dual_rows: list[ResultRow]) -> None:
        """Mean accuracy crosses the threshold between 0.0 and 0.3."""
        assert select_best(dual_rows, 0.88) == {Method.DUAL_LQR: 0.0}

    def test_lower_threshold_never_lowers_choice(self, dual_rows: list[ResultRow]) -> None:
        """Selection is monotone in the threshold."""
        choices = [select_best(dual_rows, t)[Method.DUAL_LQR] for t in (0.99, 0.93, 0.89, 0.5)]
        assert choices == [None, -0.3, 0.0, 0.3]

    def test_condition_string_applies_to_all(self, dual_rows: list[ResultRow]) -> None:
        """Static runs qualify at every cost."""
        assert select_best(dual_rows, 0.88, "none") == {Method.DUAL_LQR: 0.3}

    def test_condition_mapping(self, dual_rows: list[ResultRow]) -> None:
        """Per-method conditions; methods without rows are left out."""
        rows = [*dual_rows, row(Method.INF_LQR, 0.0, "x", AmplitudeLevel.HIGH, 0.9)]
        best = select_best(rows, 0.88, {"DualLQR": "high/orientation", "InfLQR": "high/position"})
        assert best == {Method.INF_LQR: 0.0, Method.DUAL_LQR: 0.0}

    def test_configured_defaults(self, dual_rows: list[ResultRow]) -> None:
        """Threshold 0.88 and DualLQR judged under high orientation oscillation."""
        assert select_best(dual_rows) == {Method.DUAL_LQR: 0.0}

    @pytest.mark.parametrize("threshold", [0.0, 1.5])
    def test_rejects_threshold(self, dual_rows: list[ResultRow], threshold: float) -> None:
        """Threshold must be in (0, 1]."""
        with pytest.raises(InvalidArgumentError):
            select_best(dual_rows, threshold)

    def test_rejects_empty(self) -> None:
        """Nothing to select from."""
        with pytest.raises(InvalidArgumentError):
            select_best([], 0.88)

    @pytest.mark.parametrize(
        "condition, expected",
        [
            ("high/orientation", (AmplitudeLevel.HIGH, "orientation")),
            ("low/position", (AmplitudeLevel.LOW, "position")),
            ("none", (AmplitudeLevel.NONE, "none")),
        ],
    )
    def test_parse_condition(self, condition: str, expected: tuple[AmplitudeLevel, str]) -> None:
        """'level/group' strings."""
        assert parse_condition(condition) == expected

    @pytest.mark.parametrize("condition", ["huge/position", "high", "high/sideways"])
    def test_parse_condition_rejects(self, condition: str) -> None:
        """Unknown levels and groups."""
        with pytest.raises(InvalidArgumentError):
            parse_condition(condition)


class TestStatistics:
    """Summary statistics."""

    def test_confidence_interval(self) -> None:
        """0..10: mean 5, sample sd sqrt(11), half-width 1.96."""
        mean, half_width = confidence_interval(range(11))
        assert mean == pytest.approx(5.0)
        assert half_width == pytest.approx(1.96)

    def test_single_value(self) -> None:
        """One value has no spread."""
        assert confidence_interval([0.7]) == (0.7, 0.0)

    def test_empty(self) -> None:
        """No values."""
        with pytest.raises(InvalidArgumentError):
            confidence_interval([])

    def test_summarize_groups_axes(self, dual_rows: list[ResultRow]) -> None:
        """Cells are (method, rho, group, level), static before orientation."""
        points = summarize(dual_rows)
        assert [(p.rho, p.group) for p in points[:2]] == [(-0.3, "none"), (-0.3, "orientation")]
        assert points[1].n == 2
        assert points[1].accuracy[0] == pytest.approx(0.95)

    def test_summary_table(self, dual_rows: list[ResultRow]) -> None:
        """Rows follow the oscillation conditions; missing cells show a dash."""
        table = summary_table(dual_rows, {Method.DUAL_LQR: 0.0})
        lines = table.splitlines()
        assert "DualLQR (rho=+0.0)" in lines[0]
        labels = [line.split("  ")[0] for line in lines[3:]]
        assert labels == [
            "None",
            "Low Orientation",
            "Low Position",
            "Medium Orientation",
            "Medium Position",
            "High Orientation",
            "High Position",
        ]
        assert "1.00±0.00" in lines[3]
        assert "0.90±" in lines[8]
        assert lines[4].split()[2] == "-"


class TestResultFiles:
    """Results CSV."""

    def test_roundtrip(self, dual_rows: list[ResultRow], tmp_path: Path) -> None:
        """Rows survive a write and read unchanged."""
        path = tmp_path / "out" / "results.csv"
        write_results(dual_rows, path)
        assert read_results(path) == dual_rows

    def test_bad_flag(self, dual_rows: list[ResultRow], tmp_path: Path) -> None:
        """never_arrived must be true or false."""
        path = tmp_path / "results.csv"
        write_results(dual_rows[:1], path)
        path.write_text(path.read_text().replace(",false", ",maybe"))
        with pytest.raises(ParseError) as excinfo:
            read_results(path)
        assert excinfo.value.line == 2
        assert excinfo.value.field == "never_arrived"

    def test_out_of_range_value(self, dual_rows: list[ResultRow], tmp_path: Path) -> None:
        """Validation failures name the column."""
        path = tmp_path / "results.csv"
        write_results(dual_rows[:1], path)
        path.write_text(path.read_text().replace(",0.96,", ",1.5,"))
        with pytest.raises(ParseError) as excinfo:
            read_results(path)
        assert excinfo.value.field == "accuracy"

    def test_bad_header(self, tmp_path: Path) -> None:
        """The header is fixed."""
        path = tmp_path / "results.csv"
        path.write_text("method,rho\n")
        with pytest.raises(ParseError) as excinfo:
            read_results(path)
        assert excinfo.value.line == 1


class TestReport:
    """Report files."""

    def test_writes_summary_and_figures(
        self, dual_rows: list[ResultRow], tmp_path: Path, monkeypatch: pytest.MonkeyPatch
    ) -> None:
        """Summary text, cell statistics and HTML figures per method and group."""
        monkeypatch.setattr("oscillating_grasp.plotting.svg_export_available", lambda: False)
        results = tmp_path / "results.csv"
        write_results(dual_rows, results)

        files = report(results, tmp_path / "report", threshold=0.88)

        assert files.selected == {Method.DUAL_LQR: 0.0}
        assert "DualLQR: best rho = +0.0" in files.summary.read_text()
        assert len(files.summary_csv.read_text().splitlines()) == 1 + 6
        assert sorted(p.name for p in files.figures) == [
            "DualLQR_orientation_accuracy.html",
            "DualLQR_orientation_distance.html",
        ]
        assert all(p.exists() for p in files.figures)

    def test_empty_results(self, tmp_path: Path) -> None:
        """A results file without rows cannot be reported."""
        results = tmp_path / "results.csv"
        write_results([], results)
        with pytest.raises(ParseError):
            report(results, tmp_path / "report")


class TestSweep:
    """Running plans against the fitted model."""

    @pytest.fixture
    def small_plan(self, central_goal: Pose6) -> SweepPlan:
        """DualLQR at rho 0 on the central goal, static and low X sway."""
        return override_plan(
            default_plan(),
            {
                "methods": (Method.DUAL_LQR,),
                "rhos": (0.0,),
                "axes": (Axis.X,),
                "amplitude_levels": (AmplitudeLevel.NONE, AmplitudeLevel.LOW),
                "goal_poses": (central_goal,),
            },
        )

    def test_deterministic_output(
        self, small_plan: SweepPlan, model: ModelBundle, tmp_path: Path
    ) -> None:
        """Two runs write byte-identical files; thread count does not matter."""
        first = sweep(small_plan, model, threads=1, out=tmp_path / "a.csv")
        second = sweep(small_plan, model, threads=2, out=tmp_path / "b.csv")

        assert len(first) == 2
        assert first == second
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
        assert [r.axis for r in first] == ["none", "x"]

    def test_loads_model_path(
        self, small_plan: SweepPlan, model: ModelBundle, tmp_path: Path
    ) -> None:
        """A model file path is accepted."""
        path = tmp_path / "model.json"
        save_model(model, path)
        static_only = override_plan(small_plan, {"amplitude_levels": (AmplitudeLevel.NONE,)})
        rows = sweep(static_only, path)
        assert len(rows) == 1

    def test_single_frame_model(self, small_plan: SweepPlan) -> None:
        """A model without start and end frames cannot be swept."""
        joint = JointGMM(components=list(frame_gmm().components), n_frames=1)
        with pytest.raises(ConfigurationError):
            sweep(small_plan, ModelBundle(joint=joint, horizon=200))

    def test_rejects_threads(self, small_plan: SweepPlan, model: ModelBundle) -> None:
        """At least one worker."""
        with pytest.raises(InvalidArgumentError):
            sweep(small_plan, model, threads=0)
