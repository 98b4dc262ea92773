"""Closed-loop kinematic simulation against an oscillating target."""

import csv
import logging
import math
import time as wallclock
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, InstanceOf, field_validator, model_validator
from typing_extensions import Self

from oscillating_grasp.controllers import PreparedController, StepContext, StepDiagnostics, step
from oscillating_grasp.errors import InvalidArgumentError, NumericalSingularityError, ParseError
from oscillating_grasp.geometry import FrameTransform, frame_from_pose, rotation_matrix
from oscillating_grasp.models import POSE_DIM, OscillationSpec, Pose6

logger = logging.getLogger(__name__)

LOG_HEADER = (
    "tick", "time_s",
    "x", "y", "z", "roll", "pitch", "yaw",
    "tx", "ty", "tz", "troll", "tpitch", "tyaw",
    "ux", "uy", "uz", "uroll", "upitch", "uyaw",
)  # fmt: skip


def oscillation_offset(spec: OscillationSpec, time: float) -> float:
    """amplitude * exp(-decay * time) * sin(2 pi frequency time + phase)."""
    if spec.amplitude == 0.0:
        return 0.0
    return (
        spec.amplitude
        * math.exp(-spec.decay * time)
        * math.sin(2.0 * math.pi * spec.frequency * time + spec.phase)
    )


def target_pose(
    goal: Pose6, oscillations: Sequence[OscillationSpec], time: float
) -> NDArray[np.float64]:
    """Goal pose displaced by every oscillation, each in the goal's own frame."""
    pose = goal.as_array()
    rotation = rotation_matrix(pose[3:])
    for spec in oscillations:
        offset = oscillation_offset(spec, time)
        if offset == 0.0:
            continue
        if spec.axis.is_orientation:
            pose[spec.axis.index] += offset
        else:
            pose[:3] += rotation[:, spec.axis.index] * offset
    return pose


def target_frame(
    goal: Pose6, spec: OscillationSpec | Sequence[OscillationSpec], time: float
) -> FrameTransform:
    """End frame of an oscillating target at the given time (seconds)."""
    oscillations = (spec,) if isinstance(spec, OscillationSpec) else tuple(spec)
    return frame_from_pose(Pose6.from_array(target_pose(goal, oscillations, time)))


def latency_ticks_from_ms(latency_ms: float, dt: float) -> int:
    """Sensing delay rounded to whole ticks."""
    if latency_ms < 0 or dt <= 0:
        raise InvalidArgumentError(f"need latency >= 0 and dt > 0, got {latency_ms} ms, {dt} s")
    return int(round(latency_ms / 1000.0 / dt))


class EpisodeConfig(BaseModel):
    """One closed-loop run."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    start_pose: Pose6
    goal_pose: Pose6
    controller: InstanceOf[PreparedController]
    oscillation: OscillationSpec = Field(default_factory=OscillationSpec.static)
    extra_oscillations: tuple[OscillationSpec, ...] = ()
    dt: float = Field(default=0.05, gt=0)
    horizon: int = Field(default=200, ge=2)
    velocity_clamp: tuple[float, ...] | None = None
    latency_ticks: int = Field(default=0, ge=0)
    random_phase: bool = Field(default=False, description="Draw oscillation phases from the seed")
    seed: int = 0

    @field_validator("velocity_clamp")
    @classmethod
    def check_clamp(cls, v: tuple[float, ...] | None) -> tuple[float, ...] | None:
        """One positive bound per pose dimension."""
        if v is not None and (len(v) != POSE_DIM or any(c <= 0 for c in v)):
            raise ValueError("velocity_clamp needs 6 positive bounds")
        return v

    @model_validator(mode="after")
    def check_timestep(self) -> Self:
        """The plant must integrate with the step the controller was fitted for."""
        if self.controller.model.dt != self.dt:
            raise ValueError(
                f"episode dt {self.dt} differs from the controller's {self.controller.model.dt}"
            )
        return self

    @property
    def oscillations(self) -> tuple[OscillationSpec, ...]:
        """All oscillations acting on the target, with phases drawn if requested."""
        specs = (self.oscillation, *self.extra_oscillations)
        if not self.random_phase:
            return specs
        rng = np.random.default_rng(self.seed)
        phases = rng.uniform(0.0, 2.0 * math.pi, size=len(specs))
        return tuple(
            s.model_copy(update={"phase": float(p)}) for s, p in zip(specs, phases, strict=True)
        )


@dataclass
class EpisodeLog:
    """Per-tick record of an episode.

    Row k holds tick k at time k * dt: the end-effector pose, the true target
    pose, the control applied between ticks k and k+1 (zero on the last tick),
    the step diagnostics and the controller's compute time.
    """

    dt: float
    times: NDArray[np.float64]
    states: NDArray[np.float64]
    targets: NDArray[np.float64]
    controls: NDArray[np.float64]
    diagnostics: list[StepDiagnostics | None]
    compute_time_s: NDArray[np.float64]
    method: str = ""

    def __len__(self) -> int:
        return int(self.times.shape[0])

    @property
    def ticks(self) -> NDArray[np.int64]:
        """0..T-1."""
        return np.arange(len(self), dtype=np.int64)

    @property
    def duration_s(self) -> float:
        """T * dt."""
        return len(self) * self.dt


def run_episode(config: EpisodeConfig) -> EpisodeLog:
    """Simulate the integrator plant under a prepared controller.

    The end-effector starts at the start-frame origin. At every tick but the
    last the controller sees the start frame and the end frame delayed by
    latency_ticks, its control is clamped if configured and integrated with
    x_k+1 = x_k + u_k dt. The schedule index is k + 1, clamped to the
    controller's horizon minus one.

    Raises:
        NumericalSingularityError: A controller factorization failed; the
            message names the tick
    """
    T, dt, pc = config.horizon, config.dt, config.controller
    oscillations = config.oscillations
    start_frame = frame_from_pose(config.start_pose)
    clamp = None if config.velocity_clamp is None else np.array(config.velocity_clamp)

    times = np.array([k * dt for k in range(T)])
    targets = np.array([target_pose(config.goal_pose, oscillations, t) for t in times])
    states = np.empty((T, POSE_DIM))
    controls = np.zeros((T, POSE_DIM))
    compute = np.zeros(T)
    diagnostics: list[StepDiagnostics | None] = [None] * T

    x = config.start_pose.as_array()
    for k in range(T):
        states[k] = x
        if k == T - 1:
            break
        seen = frame_from_pose(Pose6.from_array(targets[max(0, k - config.latency_ticks)]))
        ctx = StepContext(t=min(k + 1, pc.horizon - 1), x_global=x, frames_now=(start_frame, seen))
        began = wallclock.perf_counter()
        try:
            u, diagnostics[k] = step(pc, ctx)
        except (NumericalSingularityError, InvalidArgumentError) as exc:
            logger.error("%s failed at tick %d: %s", pc.method, k, exc)
            raise type(exc)(f"tick {k}: {exc}") from exc
        compute[k] = wallclock.perf_counter() - began
        if clamp is not None:
            u = np.clip(u, -clamp, clamp)
        controls[k] = u
        x = x + u * dt

    return EpisodeLog(
        dt=dt,
        times=times,
        states=states,
        targets=targets,
        controls=controls,
        diagnostics=diagnostics,
        compute_time_s=compute,
        method=pc.method.value,
    )


def replay(log: EpisodeLog) -> NDArray[np.float64]:
    """Rebuild the state sequence from the first state and the logged controls."""
    states = np.empty_like(log.states)
    x = log.states[0].copy()
    for k in range(len(log)):
        states[k] = x
        x = x + log.controls[k] * log.dt
    return states


def save_log(log: EpisodeLog, path: Path) -> None:
    """Write the log as CSV, floats in shortest round-trip form."""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(LOG_HEADER)
        for k in range(len(log)):
            values = (log.times[k], *log.states[k], *log.targets[k], *log.controls[k])
            writer.writerow([str(k), *(repr(float(v)) for v in values)])
    logger.info("Saved %d-tick episode log to %s", len(log), path)


def load_log(path: Path) -> EpisodeLog:
    """Read a log written by save_log (diagnostics and compute times are not stored)."""
    if not path.exists():
        raise FileNotFoundError(f"Episode log not found: {path}")
    rows: list[list[float]] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != LOG_HEADER:
            raise ParseError("unexpected episode log header", path=str(path), line=1)
        for line_no, record in enumerate(reader, start=2):
            if len(record) != len(LOG_HEADER):
                raise ParseError(
                    f"row has {len(record)} columns, expected {len(LOG_HEADER)}",
                    path=str(path),
                    line=line_no,
                )
            values = []
            for name, cell in zip(LOG_HEADER[1:], record[1:], strict=True):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"'{cell}' is not a number", path=str(path), line=line_no, field=name
                    ) from None
            rows.append(values)
    if len(rows) < 2:
        raise ParseError("an episode log needs at least two ticks", path=str(path))
    data = np.array(rows)
    T = data.shape[0]
    return EpisodeLog(
        dt=float(data[1, 0]),
        times=data[:, 0],
        states=data[:, 1:7],
        targets=data[:, 7:13],
        controls=data[:, 13:19],
        diagnostics=[None] * T,
        compute_time_s=np.zeros(T),
    )
