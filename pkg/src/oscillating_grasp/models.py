"""Pydantic models for validated inputs and exported records."""

import math
import sys
from enum import Enum

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from typing_extensions import Self

from oscillating_grasp.config import get_config

if sys.version_info >= (3, 11):
    from enum import StrEnum
else:  # pragma: no cover

    class StrEnum(str, Enum):
        """Backport of enum.StrEnum for Python < 3.11."""

        __str__ = str.__str__
        __format__ = str.__format__  # type: ignore[assignment]

POSE_DIM = 6


class Method(StrEnum):
    """Control strategy."""

    INF_LQR = "InfLQR"
    SINGLE_LQR = "SingleLQR"
    DUAL_LQR = "DualLQR"


class Axis(StrEnum):
    """Oscillation axis in the goal's own coordinate frame."""

    X = "x"
    Y = "y"
    Z = "z"
    ROLL = "roll"
    PITCH = "pitch"
    YAW = "yaw"

    @property
    def index(self) -> int:
        """Position of the axis in a pose vector."""
        return list(Axis).index(self)

    @property
    def is_orientation(self) -> bool:
        """Whether the axis is an angle."""
        return self.index >= 3


class AmplitudeLevel(StrEnum):
    """Oscillation amplitude level."""

    NONE = "none"
    LOW = "low"
    MEDIUM = "medium"
    HIGH = "high"


class Pose6(BaseModel):
    """6-DoF pose: position in meters, Tait-Bryan (roll, pitch, yaw) in radians."""

    model_config = ConfigDict(frozen=True)

    position: tuple[float, float, float] = Field(default=(0.0, 0.0, 0.0))
    orientation: tuple[float, float, float] = Field(default=(0.0, 0.0, 0.0))

    @field_validator("position", "orientation")
    @classmethod
    def check_finite(cls, v: tuple[float, float, float]) -> tuple[float, float, float]:
        """Reject NaN and infinite entries."""
        if not all(math.isfinite(c) for c in v):
            raise ValueError(f"pose entries must be finite, got {v}")
        return v

    @classmethod
    def from_array(cls, values: NDArray[np.float64] | list[float] | tuple[float, ...]) -> Self:
        """Build a pose from a flat [x, y, z, roll, pitch, yaw] sequence."""
        arr = [float(v) for v in values]
        if len(arr) != POSE_DIM:
            raise ValueError(f"pose needs {POSE_DIM} values, got {len(arr)}")
        return cls(position=(arr[0], arr[1], arr[2]), orientation=(arr[3], arr[4], arr[5]))

    def as_array(self) -> NDArray[np.float64]:
        """Flat [x, y, z, roll, pitch, yaw] array."""
        return np.array([*self.position, *self.orientation], dtype=np.float64)

    def canonical(self) -> "Pose6":
        """Same pose with every angle mapped into (-pi, pi]."""
        wrapped = tuple(math.pi - ((math.pi - a) % (2.0 * math.pi)) for a in self.orientation)
        return Pose6(position=self.position, orientation=wrapped)  # type: ignore[arg-type]


class OscillationSpec(BaseModel):
    """Sinusoidal, optionally decaying, motion of the target along one axis."""

    model_config = ConfigDict(frozen=True)

    axis: Axis = Field(default=Axis.X, description="Axis in the goal frame")
    amplitude: float = Field(default=0.0, ge=0, description="Meters or radians")
    frequency: float = Field(default=0.5, ge=0, description="Hz")
    phase: float = Field(default=0.0, description="Radians")
    decay: float = Field(default=0.0, ge=0, description="Exponential decay rate (1/s)")

    @model_validator(mode="after")
    def check_frequency(self) -> Self:
        """A moving target needs a positive frequency."""
        if self.amplitude > 0 and self.frequency <= 0:
            raise ValueError("frequency must be positive when amplitude > 0")
        return self

    @classmethod
    def static(cls) -> "OscillationSpec":
        """A target that never moves."""
        return cls(amplitude=0.0)


class AccuracyLimits(BaseModel):
    """Final approach limits in the end frame (no Y limit: Y is the approach axis)."""

    model_config = ConfigDict(frozen=True)

    x: float = Field(default=0.03, gt=0, description="m")
    z: float = Field(default=0.10, gt=0, description="m")
    roll: float = Field(default=0.07, gt=0, description="rad")
    pitch: float = Field(default=0.07, gt=0, description="rad")
    yaw: float = Field(default=0.07, gt=0, description="rad")

    @classmethod
    def from_config(cls) -> "AccuracyLimits":
        """Limits as configured in the [evaluation] table."""
        x, z, roll, pitch, yaw = get_config().accuracy_limits
        return cls(x=x, z=z, roll=roll, pitch=pitch, yaw=yaw)


class CostSpec(BaseModel):
    """Control cost R = I * 10**rho."""

    model_config = ConfigDict(frozen=True)

    rho: float = Field(default=0.0, ge=-12, le=12, description="Control cost exponent")

    @property
    def R(self) -> NDArray[np.float64]:
        """Control cost matrix."""
        return np.eye(POSE_DIM) * 10.0**self.rho


class SystemModel(BaseModel):
    """Integrator plant x_{t+1} = A x_t + B u_t with A = I, B = I * dt."""

    model_config = ConfigDict(frozen=True)

    dt: float = Field(default=0.05, gt=0, description="Seconds per tick")

    @property
    def A(self) -> NDArray[np.float64]:
        """State transition."""
        return np.eye(POSE_DIM)

    @property
    def B(self) -> NDArray[np.float64]:
        """Control input matrix."""
        return np.eye(POSE_DIM) * self.dt


class SynthSpec(BaseModel):
    """Variation parameters of the synthetic demonstration generator."""

    model_config = ConfigDict(frozen=True)

    horizon: int = Field(default=200, ge=2)
    start_pose: Pose6
    goal_pose: Pose6
    start_jitter: tuple[float, ...] = Field(min_length=6, max_length=6)
    goal_variation: tuple[float, ...] = Field(min_length=6, max_length=6)
    terminal_sigma_position: float = Field(default=0.004, ge=0)
    terminal_sigma_orientation: float = Field(default=0.01, ge=0)
    noise_amplitude_position: float = Field(default=0.03, ge=0)
    noise_amplitude_orientation: float = Field(default=0.08, ge=0)
    approach_tangent_scale: float = Field(default=2.0, gt=0)
    terminal_push: float = Field(default=0.003, ge=0)
    terminal_sigma_depth: float = Field(
        default=0.08, ge=0, description="Spread of the stopping depth along the approach axis"
    )
    pitch_roll_coupling: float = Field(
        default=0.5, description="Goal pitch change per radian of goal roll change"
    )

    @classmethod
    def from_config(cls) -> "SynthSpec":
        """Generator parameters as configured in the [synthetic] table."""
        config = get_config()
        return cls(
            horizon=config.horizon,
            start_pose=Pose6.from_array(config.start_pose),
            goal_pose=Pose6.from_array(config.goal_pose),
            start_jitter=config.start_jitter,
            goal_variation=config.goal_variation,
            terminal_sigma_position=config.terminal_sigma_position,
            terminal_sigma_orientation=config.terminal_sigma_orientation,
            noise_amplitude_position=config.noise_amplitude_position,
            noise_amplitude_orientation=config.noise_amplitude_orientation,
            approach_tangent_scale=config.approach_tangent_scale,
            terminal_push=config.terminal_push,
            terminal_sigma_depth=config.terminal_sigma_depth,
            pitch_roll_coupling=config.pitch_roll_coupling,
        )


class SweepPlan(BaseModel):
    """Experimental factors of a benchmark sweep."""

    model_config = ConfigDict(frozen=True)

    methods: tuple[Method, ...] = Field(min_length=1)
    rhos: tuple[float, ...] = Field(min_length=1)
    axes: tuple[Axis, ...] = Field(min_length=1)
    coupled_axes: tuple[Axis, ...] = Field(
        default=(), description="Axes that oscillate at the same level alongside each swept axis"
    )
    amplitude_levels: tuple[AmplitudeLevel, ...] = Field(min_length=1)
    position_amplitudes: tuple[float, float, float] = (0.05, 0.10, 0.15)
    orientation_amplitudes: tuple[float, float, float] = (0.15, 0.30, 0.45)
    goal_poses: tuple[Pose6, ...] = Field(min_length=1)
    start_pose: Pose6
    repetitions: int = Field(default=1, ge=1)
    seed: int = 0
    dt: float = Field(default=0.05, gt=0)
    horizon: int = Field(default=200, ge=2)
    frequency: float = Field(default=0.5, gt=0)
    decay: float = Field(default=0.0, ge=0)
    phase: float | None = Field(default=0.0, description="None draws the phase from the seed")
    latency_ticks: int = Field(default=0, ge=0)
    velocity_clamp: tuple[float, ...] | None = None

    @field_validator("velocity_clamp")
    @classmethod
    def check_clamp(cls, v: tuple[float, ...] | None) -> tuple[float, ...] | None:
        """Clamp needs one positive bound per pose dimension."""
        if v is not None and (len(v) != POSE_DIM or any(c <= 0 for c in v)):
            raise ValueError("velocity_clamp needs 6 positive bounds")
        return v

    @property
    def seeds(self) -> tuple[int, ...]:
        """One seed per repetition."""
        return tuple(self.seed + r for r in range(self.repetitions))

    def amplitude_for(self, axis: Axis, level: AmplitudeLevel) -> float:
        """Amplitude of an oscillation level on an axis."""
        if level is AmplitudeLevel.NONE:
            return 0.0
        levels = self.orientation_amplitudes if axis.is_orientation else self.position_amplitudes
        return levels[list(AmplitudeLevel).index(level) - 1]


RESULT_FIELDS = (
    "method",
    "rho",
    "axis",
    "amplitude_level",
    "goal_id",
    "seed",
    "accuracy",
    "translation_m",
    "rotation_rad",
    "grasp_time_s",
    "never_arrived",
)


class ResultRow(BaseModel):
    """One episode's outcome in a sweep."""

    model_config = ConfigDict(frozen=True)

    method: Method
    rho: float
    axis: str = Field(description="Oscillation axis or 'none' for a static target")
    amplitude_level: AmplitudeLevel
    goal_id: int = Field(ge=0)
    seed: int
    accuracy: float = Field(ge=0, le=1)
    translation_m: float = Field(ge=0)
    rotation_rad: float = Field(ge=0)
    grasp_time_s: float | None = None
    never_arrived: bool = False

    @field_validator("axis")
    @classmethod
    def check_axis(cls, v: str) -> str:
        """Axis column is an Axis value or 'none'."""
        if v != "none" and v not in {a.value for a in Axis}:
            raise ValueError(f"unknown axis '{v}'")
        return v

    @property
    def group(self) -> str:
        """'position', 'orientation' or 'none'."""
        if self.axis == "none":
            return "none"
        return "orientation" if Axis(self.axis).is_orientation else "position"

    def to_csv_row(self) -> list[str]:
        """Values in RESULT_FIELDS order, floats in shortest round-trip form."""
        return [
            self.method.value,
            repr(self.rho),
            self.axis,
            self.amplitude_level.value,
            str(self.goal_id),
            str(self.seed),
            repr(self.accuracy),
            repr(self.translation_m),
            repr(self.rotation_rad),
            "" if self.grasp_time_s is None else repr(self.grasp_time_s),
            "true" if self.never_arrived else "false",
        ]
