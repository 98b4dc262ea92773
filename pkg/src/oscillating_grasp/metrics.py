"""Episode evaluation: final approach accuracy, travel distance and grasp time."""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from oscillating_grasp.config import get_config
from oscillating_grasp.errors import InvalidArgumentError
from oscillating_grasp.geometry import canonicalize_angles, path_length, poses_in_frames
from oscillating_grasp.models import AccuracyLimits
from oscillating_grasp.sim import EpisodeLog


@dataclass
class EpisodeMetrics:
    """Outcome of one episode."""

    final_approach_accuracy: float
    approach_tick_count: int
    translation_m: float
    rotation_rad: float
    grasp_time_s: float | None
    duration_s: float

    @property
    def never_arrived(self) -> bool:
        """No tick came within the approach distance."""
        return self.approach_tick_count == 0


def local_states(log: EpisodeLog) -> NDArray[np.float64]:
    """End-effector poses in the end frame of the same tick, angle offsets in (-pi, pi]."""
    local = poses_in_frames(log.states, log.targets)
    local[:, 3:] = canonicalize_angles(local[:, 3:])
    return local


def final_approach_accuracy(
    log: EpisodeLog,
    limits: AccuracyLimits | None = None,
    approach_distance: float | None = None,
) -> tuple[float, int]:
    """Fraction of final-approach ticks inside the accuracy limits.

    A tick belongs to the final approach when its end-frame Y is below the
    approach distance, whether or not earlier ticks left the zone again.

    Returns:
        Tuple of (fraction, approach tick count); the fraction is 0 when no
        tick reached the approach zone
    """
    if len(log) == 0:
        raise InvalidArgumentError("episode log is empty")
    if limits is None:
        limits = AccuracyLimits.from_config()
    if approach_distance is None:
        approach_distance = get_config().approach_distance

    local = local_states(log)
    approach = local[:, 1] < approach_distance
    count = int(np.count_nonzero(approach))
    if count == 0:
        return 0.0, 0
    bounds = np.array([limits.x, limits.z, limits.roll, limits.pitch, limits.yaw])
    inside = np.all(np.abs(local[approach][:, [0, 2, 3, 4, 5]]) <= bounds, axis=1)
    return float(np.count_nonzero(inside)) / count, count


def travel(log: EpisodeLog) -> tuple[float, float]:
    """Translation (m) and rotation (rad) travelled by the end-effector."""
    return path_length(log.states)


def grasp_time(log: EpisodeLog, misalignment_tolerance: float | None = None) -> float | None:
    """Time of the first tick at which the end-effector touches the target.

    Touching means lying within the tolerance sphere around the end-frame
    origin at or past the origin along the approach axis (Y <= 0).
    """
    if misalignment_tolerance is None:
        misalignment_tolerance = get_config().misalignment_tolerance
    if misalignment_tolerance <= 0:
        raise InvalidArgumentError(f"tolerance must be positive, got {misalignment_tolerance}")
    local = local_states(log)
    touching = (np.linalg.norm(local[:, :3], axis=1) <= misalignment_tolerance) & (local[:, 1] <= 0)
    hits = np.flatnonzero(touching)
    return float(log.times[hits[0]]) if hits.size else None


def evaluate(
    log: EpisodeLog,
    limits: AccuracyLimits | None = None,
    misalignment_tolerance: float | None = None,
) -> EpisodeMetrics:
    """All metrics of one episode."""
    accuracy, count = final_approach_accuracy(log, limits)
    translation, rotation = travel(log)
    return EpisodeMetrics(
        final_approach_accuracy=accuracy,
        approach_tick_count=count,
        translation_m=translation,
        rotation_rad=rotation,
        grasp_time_s=grasp_time(log, misalignment_tolerance),
        duration_s=log.duration_s,
    )
