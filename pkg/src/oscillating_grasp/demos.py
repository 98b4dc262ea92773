"""Demonstration handling: resampling, task encoding, synthetic generation and file I/O."""

import csv
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field, ValidationError

from oscillating_grasp.errors import InvalidArgumentError, ParseError
from oscillating_grasp.geometry import (
    FrameTransform,
    canonicalize_angles,
    frame_from_pose,
    to_frame,
    to_global,
    unwrap_angles,
)
from oscillating_grasp.models import POSE_DIM, Pose6, SynthSpec

logger = logging.getLogger(__name__)

DATASET_FORMAT_VERSION = 1
CSV_HEADER = ("t", "x", "y", "z", "roll", "pitch", "yaw")
MANIFEST_NAME = "manifest.json"


@dataclass(frozen=True)
class Demonstration:
    """A recorded trajectory in the global frame with its start and end frames."""

    global_trajectory: NDArray[np.float64]
    start_frame: FrameTransform
    end_frame: FrameTransform

    def __post_init__(self) -> None:
        traj = self.global_trajectory
        if traj.ndim != 2 or traj.shape[1] != POSE_DIM or traj.shape[0] < 2:
            raise InvalidArgumentError(f"trajectory must be T x 6 with T >= 2, got {traj.shape}")
        if not np.all(np.isfinite(traj)):
            raise InvalidArgumentError("trajectory contains non-finite entries")

    @property
    def horizon(self) -> int:
        """Number of timesteps T."""
        return int(self.global_trajectory.shape[0])

    @property
    def frames(self) -> tuple[FrameTransform, FrameTransform]:
        """(start frame, end frame)."""
        return self.start_frame, self.end_frame

    def poses(self) -> list[Pose6]:
        """Trajectory as Pose6 values."""
        return [Pose6.from_array(row) for row in self.global_trajectory]


@dataclass(frozen=True)
class TaskEncoding:
    """Stacked [time; pose in frame 1; ...; pose in frame J] columns of one demonstration."""

    data: NDArray[np.float64]
    n_frames: int

    @property
    def horizon(self) -> int:
        """Number of columns T."""
        return int(self.data.shape[1])

    def frame_block(self, j: int) -> NDArray[np.float64]:
        """Rows of frame j (0-based), T x 6."""
        start = 1 + j * POSE_DIM
        return self.data[start : start + POSE_DIM].T


@dataclass(frozen=True)
class DemoSet:
    """Demonstrations resampled to a common length."""

    demonstrations: list[Demonstration]
    common_T: int

    def __post_init__(self) -> None:
        for i, demo in enumerate(self.demonstrations):
            if demo.horizon != self.common_T:
                raise InvalidArgumentError(
                    f"demonstration {i} has {demo.horizon} steps, expected {self.common_T}"
                )

    def __len__(self) -> int:
        return len(self.demonstrations)


def resample(traj: NDArray[np.float64], T: int) -> NDArray[np.float64]:
    """Linearly resample a T0 x 6 pose sequence to T uniformly spaced samples.

    Angles are unwrapped before interpolation. Endpoints are preserved exactly.
    """
    arr = np.asarray(traj, dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != POSE_DIM:
        raise InvalidArgumentError(f"trajectory must be T0 x 6, got {arr.shape}")
    if arr.shape[0] < 2 or T < 2:
        raise InvalidArgumentError(f"resampling needs T0 >= 2 and T >= 2, got {arr.shape[0]}, {T}")
    source = arr.copy()
    source[:, 3:] = unwrap_angles(source[:, 3:])
    knots = np.arange(arr.shape[0], dtype=np.float64)
    query = np.linspace(0.0, float(arr.shape[0] - 1), T)
    return np.column_stack([np.interp(query, knots, source[:, d]) for d in range(POSE_DIM)])


def encode_demo(demo: Demonstration) -> TaskEncoding:
    """Task encoding of one demonstration in its start and end frames."""
    T = demo.horizon
    tau = np.arange(1, T + 1, dtype=np.float64)
    global_cols = np.vstack((np.zeros(T), demo.global_trajectory.T))
    blocks = [to_frame(frame, global_cols)[1:] for frame in demo.frames]
    return TaskEncoding(data=np.vstack([tau, *blocks]), n_frames=len(blocks))


def encode(demo_set: DemoSet) -> list[TaskEncoding]:
    """Task encoding of every demonstration in the set."""
    return [encode_demo(demo) for demo in demo_set.demonstrations]


def decode(encoding: TaskEncoding, frames: tuple[FrameTransform, ...]) -> list[NDArray[np.float64]]:
    """Map each frame block back to the global frame (inverse of encode)."""
    if len(frames) != encoding.n_frames:
        raise InvalidArgumentError(f"expected {encoding.n_frames} frames, got {len(frames)}")
    T = encoding.horizon
    out = []
    for j, frame in enumerate(frames):
        local = np.vstack((np.zeros(T), encoding.frame_block(j).T))
        out.append(to_global(frame, local)[1:].T)
    return out


def pooled_samples(encodings: list[TaskEncoding]) -> NDArray[np.float64]:
    """Stack all encoded columns as an N x d sample matrix for EM."""
    if not encodings:
        raise InvalidArgumentError("no encodings to pool")
    return np.hstack([e.data for e in encodings]).T


def min_jerk(s: NDArray[np.float64]) -> NDArray[np.float64]:
    """Minimum-jerk time profile 10s^3 - 15s^4 + 6s^5 on [0, 1]."""
    s = np.clip(s, 0.0, 1.0)
    profile: NDArray[np.float64] = s**3 * (10.0 - 15.0 * s + 6.0 * s**2)
    return profile


def _hermite(
    sigma: NDArray[np.float64],
    p0: NDArray[np.float64],
    p1: NDArray[np.float64],
    m0: NDArray[np.float64],
    m1: NDArray[np.float64],
) -> NDArray[np.float64]:
    s2, s3 = sigma**2, sigma**3
    h00 = 2 * s3 - 3 * s2 + 1
    h10 = s3 - 2 * s2 + sigma
    h01 = -2 * s3 + 3 * s2
    h11 = s3 - s2
    curve: NDArray[np.float64] = (
        np.outer(h00, p0) + np.outer(h10, m0) + np.outer(h01, p1) + np.outer(h11, m1)
    )
    return curve


def _smooth_noise(
    rng: np.random.Generator, s: NDArray[np.float64], amplitude: float
) -> NDArray[np.float64]:
    """Sum of three random low-frequency sinusoids with unit-order amplitude."""
    gains = rng.normal(0.0, 1.0, size=3) / np.sqrt(3.0)
    freqs = rng.uniform(0.5, 2.0, size=3)
    phases = rng.uniform(0.0, 2.0 * np.pi, size=3)
    waves = np.sin(2.0 * np.pi * np.outer(s, freqs) + phases)
    noise: NDArray[np.float64] = amplitude * (waves @ gains)
    return noise


def _synth_one(rng: np.random.Generator, spec: SynthSpec, depth: float) -> Demonstration:
    T = spec.horizon
    s = np.linspace(0.0, 1.0, T)
    sigma = min_jerk(s)

    start = spec.start_pose.as_array() + rng.normal(0.0, 1.0, POSE_DIM) * np.array(
        spec.start_jitter
    )
    goal = spec.goal_pose.as_array() + rng.uniform(-1.0, 1.0, POSE_DIM) * np.array(
        spec.goal_variation
    )
    goal[4] += spec.pitch_roll_coupling * (goal[3] - spec.goal_pose.as_array()[3])
    # Goal angles are kept on the same branch as the start so the additive
    # orientation block sees no 2*pi jump.
    turn = canonicalize_angles(goal[3:] - start[3:])
    goal[3:] = start[3:] + turn
    start_frame = frame_from_pose(Pose6.from_array(start))
    end_frame = frame_from_pose(Pose6.from_array(goal))

    p0, p1 = start[:3], goal[:3]
    chord = float(np.linalg.norm(p1 - p0))
    approach = end_frame.rotation @ np.array([0.0, -1.0, 0.0])
    position = _hermite(sigma, p0, p1, p1 - p0, approach * spec.approach_tangent_scale * chord)

    blend = min_jerk(np.clip((s - 0.5) / 0.2, 0.0, 1.0))
    orientation = start[3:] + np.outer(blend, turn)

    # Noise lives in the end frame: a terminal offset that grows with the path
    # profile plus a mid-trajectory bump that vanishes at both ends.
    bump = np.sin(np.pi * np.clip(s / 0.7, 0.0, 1.0)) ** 2
    terminal_sigma = np.array(
        [spec.terminal_sigma_position] * 3 + [spec.terminal_sigma_orientation] * 3
    )
    amplitude = [spec.noise_amplitude_position] * 3 + [spec.noise_amplitude_orientation] * 3
    offsets = rng.normal(0.0, 1.0, POSE_DIM) * terminal_sigma
    offsets[1] -= spec.terminal_push
    local_noise = np.column_stack(
        [sigma * offsets[d] + bump * _smooth_noise(rng, s, amplitude[d]) for d in range(POSE_DIM)]
    )
    # stopping depth, rising only late in the motion
    local_noise[:, 1] += sigma**3 * depth
    position = position + local_noise[:, :3] @ end_frame.rotation.T
    orientation = orientation + local_noise[:, 3:]

    trajectory = np.column_stack((position, orientation))
    trajectory[0] = start
    return Demonstration(global_trajectory=trajectory, start_frame=start_frame, end_frame=end_frame)


def synth_demos(n: int, seed: int, spec: SynthSpec | None = None) -> DemoSet:
    """Generate a deterministic synthetic demonstration set.

    Each demonstration starts at its start-frame origin, follows a minimum-jerk
    Hermite curve whose final tangent points along the end frame's -Y axis, and
    blends its orientation to the end frame's between 50% and 70% of the motion,
    so it has settled before the final approach. Noise is zero at the start and
    shrinks to a small terminal offset in the end frame, giving variance funnels
    at both ends. The stopping depth along the approach axis is drawn per
    demonstration and centered over the set, and the goal pitch follows the
    goal roll by a fixed coupling.

    Args:
        n: Number of demonstrations
        seed: Generator seed
        spec: Variation parameters; defaults to the [synthetic] configuration

    Returns:
        DemoSet with n demonstrations of spec.horizon steps
    """
    if n < 1:
        raise InvalidArgumentError(f"need at least one demonstration, got {n}")
    if spec is None:
        spec = SynthSpec.from_config()
    rng = np.random.default_rng(seed)
    depths = rng.normal(0.0, spec.terminal_sigma_depth, n)
    depths -= depths.mean()
    demos = [_synth_one(rng, spec, float(depth)) for depth in depths]
    logger.info("Generated %d synthetic demonstrations (T=%d, seed=%d)", n, spec.horizon, seed)
    return DemoSet(demonstrations=demos, common_T=spec.horizon)


def fingerprint(demo_set: DemoSet) -> str:
    """SHA-256 over the set's trajectories and frame origins."""
    digest = hashlib.sha256()
    digest.update(str(demo_set.common_T).encode())
    for demo in demo_set.demonstrations:
        digest.update(np.ascontiguousarray(demo.global_trajectory).tobytes())
        for frame in demo.frames:
            digest.update(np.ascontiguousarray(frame.b).tobytes())
    return digest.hexdigest()


class DemoEntry(BaseModel):
    """Manifest line for one demonstration."""

    file: str
    start_pose: list[float] = Field(min_length=6, max_length=6)
    end_pose: list[float] = Field(min_length=6, max_length=6)


class DatasetManifest(BaseModel):
    """Dataset manifest file."""

    format_version: int
    common_T: int = Field(ge=2)
    demos: list[DemoEntry]


def save_set(demo_set: DemoSet, directory: Path) -> Path:
    """Write one CSV per demonstration plus a manifest.

    Returns:
        Path of the manifest file
    """
    directory.mkdir(parents=True, exist_ok=True)
    entries = []
    for i, demo in enumerate(demo_set.demonstrations):
        name = f"demo_{i:03d}.csv"
        with open(directory / name, "w", newline="") as f:
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(CSV_HEADER)
            for t, row in enumerate(demo.global_trajectory, start=1):
                writer.writerow([str(t), *(repr(float(v)) for v in row)])
        entries.append(
            DemoEntry(
                file=name,
                start_pose=[float(v) for v in demo.start_frame.b[1:]],
                end_pose=[float(v) for v in demo.end_frame.b[1:]],
            )
        )
    manifest = DatasetManifest(
        format_version=DATASET_FORMAT_VERSION, common_T=demo_set.common_T, demos=entries
    )
    path = directory / MANIFEST_NAME
    path.write_text(json.dumps(manifest.model_dump(), indent=2) + "\n")
    logger.info("Saved %d demonstrations to %s", len(entries), directory)
    return path


def _read_trajectory(path: Path, expected_T: int) -> NDArray[np.float64]:
    if not path.exists():
        raise ParseError("demonstration file not found", path=str(path))
    rows: list[list[float]] = []
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader, None)
        if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
            raise ParseError(f"header must be {','.join(CSV_HEADER)}", path=str(path), line=1)
        for line_no, record in enumerate(reader, start=2):
            if len(record) != len(CSV_HEADER):
                raise ParseError(
                    f"row has {len(record)} columns, expected {len(CSV_HEADER)}",
                    path=str(path),
                    line=line_no,
                )
            values = []
            for name, cell in zip(CSV_HEADER[1:], record[1:], strict=True):
                try:
                    values.append(float(cell))
                except ValueError:
                    raise ParseError(
                        f"'{cell}' is not a number", path=str(path), line=line_no, field=name
                    ) from None
            rows.append(values)
    if len(rows) != expected_T:
        raise ParseError(f"{len(rows)} rows, manifest says {expected_T}", path=str(path))
    return np.array(rows, dtype=np.float64)


def load_set(path: Path) -> DemoSet:
    """Load a dataset from its directory or manifest path."""
    manifest_path = path / MANIFEST_NAME if path.is_dir() else path
    if not manifest_path.exists():
        raise FileNotFoundError(f"Dataset manifest not found: {manifest_path}")
    try:
        manifest = DatasetManifest.model_validate(json.loads(manifest_path.read_text()))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=str(manifest_path), line=exc.lineno) from None
    except ValidationError as exc:
        first = exc.errors()[0]
        field = ".".join(str(p) for p in first["loc"])
        raise ParseError(first["msg"], path=str(manifest_path), field=field) from None
    if manifest.format_version != DATASET_FORMAT_VERSION:
        raise ParseError(
            f"unsupported format version {manifest.format_version}",
            path=str(manifest_path),
            field="format_version",
        )
    if not manifest.demos:
        raise InvalidArgumentError(f"manifest {manifest_path} lists no demonstrations")

    demos = []
    for entry in manifest.demos:
        trajectory = _read_trajectory(manifest_path.parent / entry.file, manifest.common_T)
        demos.append(
            Demonstration(
                global_trajectory=trajectory,
                start_frame=frame_from_pose(Pose6.from_array(entry.start_pose)),
                end_frame=frame_from_pose(Pose6.from_array(entry.end_pose)),
            )
        )
    logger.info("Loaded %d demonstrations from %s", len(demos), manifest_path.parent)
    return DemoSet(demonstrations=demos, common_T=manifest.common_T)
