"""Per-tick control policies: InfLQR, SingleLQR and DualLQR."""

import logging
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from oscillating_grasp.errors import InvalidArgumentError, UnsupportedConfigurationError
from oscillating_grasp.geometry import (
    FrameTransform,
    pose_to_frame,
    rotate_control,
    rotate_covariance,
)
from oscillating_grasp.lqr import (
    FiniteSchedule,
    control_finite,
    control_infinite,
    fit_finite,
    gain_infinite,
    precision,
)
from oscillating_grasp.mixture import FrameGMM, JointGMM, combine, split
from oscillating_grasp.models import POSE_DIM, CostSpec, Method, SystemModel
from oscillating_grasp.regression import ReferenceTrack, gmr, gmr_track

logger = logging.getLogger(__name__)

START_FRAME = 0
END_FRAME = 1


@dataclass(frozen=True)
class StepContext:
    """What a controller sees at one tick."""

    t: int
    x_global: NDArray[np.float64]
    frames_now: tuple[FrameTransform, ...]

    def __post_init__(self) -> None:
        if self.x_global.shape != (POSE_DIM,):
            raise InvalidArgumentError(
                f"state must have {POSE_DIM} entries, got {self.x_global.shape}"
            )
        if self.t < 1:
            raise InvalidArgumentError(f"time index must be at least 1, got {self.t}")


@dataclass(frozen=True)
class PreparedController:
    """Everything a method needs at run time, computed once before execution."""

    method: Method
    cost: CostSpec
    model: SystemModel
    horizon: int
    frame_gmms: list[FrameGMM] = field(default_factory=list)
    tracks: list[ReferenceTrack] = field(default_factory=list)
    schedules: list[FiniteSchedule] = field(default_factory=list)
    frame_ids: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if self.method is Method.INF_LQR:
            ok = len(self.frame_gmms) == 2 and not self.schedules
        else:
            expected = 1 if self.method is Method.SINGLE_LQR else 2
            ok = len(self.schedules) == len(self.tracks) == len(self.frame_ids) == expected
        if not ok:
            raise InvalidArgumentError(f"contents do not match method {self.method}")


@dataclass
class StepDiagnostics:
    """Intermediate quantities of one step."""

    local_states: list[NDArray[np.float64]]
    local_controls: list[NDArray[np.float64]]
    global_controls: list[NDArray[np.float64]]
    covariance_diagonals: list[NDArray[np.float64]]
    weights: NDArray[np.float64] | None = None


def prepare(
    method: Method, joint: JointGMM, cost: CostSpec, model: SystemModel, T: int
) -> PreparedController:
    """Precompute the per-method models, reference tracks and schedules.

    Raises:
        UnsupportedConfigurationError: The model does not have exactly a start
            and an end frame
    """
    if joint.n_frames != 2:
        raise UnsupportedConfigurationError(
            f"controllers need a start and an end frame, model has {joint.n_frames} frames"
        )
    frame_gmms = split(joint)
    if method is Method.INF_LQR:
        return PreparedController(
            method=method, cost=cost, model=model, horizon=T, frame_gmms=frame_gmms
        )

    frame_ids = (END_FRAME,) if method is Method.SINGLE_LQR else (START_FRAME, END_FRAME)
    tracks = [gmr_track(frame_gmms[j], T) for j in frame_ids]
    schedules = [fit_finite(track, cost, model) for track in tracks]
    logger.debug("Prepared %s with rho=%s over %d ticks", method, cost.rho, T)
    return PreparedController(
        method=method,
        cost=cost,
        model=model,
        horizon=T,
        tracks=tracks,
        schedules=schedules,
        frame_ids=frame_ids,
    )


def fusion_weights(covariances: list[NDArray[np.float64]]) -> NDArray[np.float64]:
    """Per-dimension inverse-variance weights, normalized over the inputs.

    Off-diagonal entries are ignored, so each weight is 1 / Sigma[d, d].

    Returns:
        Array of shape (len(covariances), d) whose columns sum to 1
    """
    if not covariances:
        raise InvalidArgumentError("need at least one covariance")
    diagonals = np.array([np.diag(c) for c in covariances])
    if np.any(diagonals <= 0) or not np.all(np.isfinite(diagonals)):
        raise InvalidArgumentError("covariance diagonals must be strictly positive and finite")
    inverse = 1.0 / diagonals
    weights: NDArray[np.float64] = inverse / inverse.sum(axis=0)
    return weights


def fuse_controls(
    controls: list[NDArray[np.float64]], covariances: list[NDArray[np.float64]]
) -> NDArray[np.float64]:
    """Precision-weighted average of controls, dimension by dimension."""
    if len(controls) != len(covariances):
        raise InvalidArgumentError(
            f"got {len(controls)} controls but {len(covariances)} covariances"
        )
    weights = fusion_weights(covariances)
    fused: NDArray[np.float64] = np.sum(weights * np.array(controls), axis=0)
    return fused


def step_inflqr(
    pc: PreparedController, ctx: StepContext
) -> tuple[NDArray[np.float64], StepDiagnostics]:
    """Fuse the frame models for the current frames, regress at t and apply the one-step gain."""
    if pc.method is not Method.INF_LQR:
        raise InvalidArgumentError(f"step_inflqr needs an InfLQR controller, got {pc.method}")
    combined = combine(pc.frame_gmms, list(ctx.frames_now))
    estimate = gmr(combined, float(ctx.t))
    K = gain_infinite(precision(estimate.covariance), pc.cost, pc.model)
    u = control_infinite(K, estimate.mean, ctx.x_global)
    diagnostics = StepDiagnostics(
        local_states=[ctx.x_global],
        local_controls=[u],
        global_controls=[u],
        covariance_diagonals=[np.diag(estimate.covariance).copy()],
    )
    return u, diagnostics


def _frame_control(
    pc: PreparedController, slot: int, ctx: StepContext
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    frame = ctx.frames_now[pc.frame_ids[slot]]
    x_local = pose_to_frame(frame, ctx.x_global)
    u_local = control_finite(pc.schedules[slot], ctx.t, x_local)
    return x_local, u_local, rotate_control(frame, u_local)


def step_single(
    pc: PreparedController, ctx: StepContext
) -> tuple[NDArray[np.float64], StepDiagnostics]:
    """Finite-horizon LQR in the end frame, control rotated back to the global frame."""
    if pc.method is not Method.SINGLE_LQR:
        raise InvalidArgumentError(f"step_single needs a SingleLQR controller, got {pc.method}")
    x_local, u_local, u_global = _frame_control(pc, 0, ctx)
    diagnostics = StepDiagnostics(
        local_states=[x_local],
        local_controls=[u_local],
        global_controls=[u_global],
        covariance_diagonals=[np.diag(pc.tracks[0].at(ctx.t).covariance).copy()],
    )
    return u_global, diagnostics


def step_dual(
    pc: PreparedController, ctx: StepContext
) -> tuple[NDArray[np.float64], StepDiagnostics]:
    """One finite-horizon LQR per frame, fused by the frames' GMR precision.

    Each frame's reference covariance is rotated into the global frame before
    its diagonal is taken, so the weights and the rotated controls share axes.
    """
    if pc.method is not Method.DUAL_LQR:
        raise InvalidArgumentError(f"step_dual needs a DualLQR controller, got {pc.method}")
    results = [_frame_control(pc, slot, ctx) for slot in range(len(pc.schedules))]
    covariances = [
        rotate_covariance(ctx.frames_now[j], track.at(ctx.t).covariance)
        for j, track in zip(pc.frame_ids, pc.tracks, strict=True)
    ]
    controls = [r[2] for r in results]
    u = fuse_controls(controls, covariances)
    weights = fusion_weights(covariances)
    diagnostics = StepDiagnostics(
        local_states=[r[0] for r in results],
        local_controls=[r[1] for r in results],
        global_controls=controls,
        covariance_diagonals=[np.diag(c).copy() for c in covariances],
        weights=weights,
    )
    return u, diagnostics


_STEPS = {
    Method.INF_LQR: step_inflqr,
    Method.SINGLE_LQR: step_single,
    Method.DUAL_LQR: step_dual,
}


def step(pc: PreparedController, ctx: StepContext) -> tuple[NDArray[np.float64], StepDiagnostics]:
    """Run the step function matching the controller's method."""
    return _STEPS[pc.method](pc, ctx)
