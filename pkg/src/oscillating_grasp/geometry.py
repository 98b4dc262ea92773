"""6-DoF pose algebra: angle conversions, reference frames and path distance.

Orientations are Tait-Bryan angles (roll, pitch, yaw) composed extrinsically
about X, then Y, then Z, i.e. R = Rz(yaw) @ Ry(pitch) @ Rx(roll). Reference
frames follow the task-parameterized block form: the time entry passes through,
positions are rotated and offset, and orientations are only offset (identity
block), so angles add rather than compose.
"""

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.spatial.transform import Rotation

from oscillating_grasp.errors import InvalidArgumentError
from oscillating_grasp.models import POSE_DIM, Pose6

# scipy's lowercase sequence means extrinsic rotations
EULER_SEQUENCE = "xyz"
CONVENTION_TAG = "tait-bryan-extrinsic-xyz"
ENCODED_DIM = 1 + POSE_DIM

_POS = slice(1, 4)
_ORI = slice(4, 7)
_ORTHO_TOL = 1e-9


def rotation_matrix(orientation: NDArray[np.float64] | Sequence[float]) -> NDArray[np.float64]:
    """Rotation matrix of a (roll, pitch, yaw) triple."""
    angles = np.asarray(orientation, dtype=np.float64)
    if angles.shape != (3,) or not np.all(np.isfinite(angles)):
        raise InvalidArgumentError(f"orientation must be 3 finite angles, got {angles!r}")
    matrix: NDArray[np.float64] = Rotation.from_euler(EULER_SEQUENCE, angles).as_matrix()
    return matrix


def canonicalize_angles(angles: NDArray[np.float64] | float) -> NDArray[np.float64]:
    """Map angles into (-pi, pi]."""
    a = np.asarray(angles, dtype=np.float64)
    wrapped: NDArray[np.float64] = np.pi - np.mod(np.pi - a, 2.0 * np.pi)
    return wrapped


def unwrap_angles(angles: NDArray[np.float64]) -> NDArray[np.float64]:
    """Unwrap a T x k angle sequence column-wise so successive steps lie in [-pi, pi]."""
    unwrapped: NDArray[np.float64] = np.unwrap(np.asarray(angles, dtype=np.float64), axis=0)
    return unwrapped


@dataclass(frozen=True)
class FrameTransform:
    """Reference frame as an origin vector b and block matrix A = diag(1, R, I)."""

    A: NDArray[np.float64]
    b: NDArray[np.float64]

    def __post_init__(self) -> None:
        A, b = self.A, self.b
        if A.shape != (ENCODED_DIM, ENCODED_DIM) or b.shape != (ENCODED_DIM,):
            raise InvalidArgumentError(
                f"frame needs A {ENCODED_DIM}x{ENCODED_DIM} and b of {ENCODED_DIM}, "
                f"got {A.shape} and {b.shape}"
            )
        if b[0] != 0.0:
            raise InvalidArgumentError("frame origin must have a zero time entry")
        expected = np.zeros_like(A)
        expected[0, 0] = 1.0
        expected[_POS, _POS] = A[_POS, _POS]
        expected[_ORI, _ORI] = np.eye(3)
        if not np.array_equal(A, expected):
            raise InvalidArgumentError("frame matrix must have the diag(1, R, I) block form")
        R = A[_POS, _POS]
        if (
            np.max(np.abs(R.T @ R - np.eye(3))) > _ORTHO_TOL
            or abs(np.linalg.det(R) - 1.0) > _ORTHO_TOL
        ):
            raise InvalidArgumentError("frame position block must be a proper rotation")

    @property
    def rotation(self) -> NDArray[np.float64]:
        """Position block R."""
        return self.A[_POS, _POS]

    @property
    def origin(self) -> Pose6:
        """Pose of the frame origin."""
        return Pose6.from_array(self.b[1:])

    @classmethod
    def identity(cls) -> "FrameTransform":
        """Frame coinciding with the global frame."""
        return cls(A=np.eye(ENCODED_DIM), b=np.zeros(ENCODED_DIM))


def frame_from_pose(pose: Pose6) -> FrameTransform:
    """Build the reference frame whose origin is the given pose."""
    values = pose.as_array()
    if not np.all(np.isfinite(values)):
        raise InvalidArgumentError(f"pose must be finite, got {values!r}")
    A = np.eye(ENCODED_DIM)
    A[_POS, _POS] = rotation_matrix(values[3:])
    b = np.concatenate(([0.0], values))
    return FrameTransform(A=A, b=b)


def _check_columns(frame: FrameTransform, columns: NDArray[np.float64]) -> NDArray[np.float64]:
    c = np.asarray(columns, dtype=np.float64)
    if c.ndim not in (1, 2) or c.shape[0] != frame.b.shape[0]:
        raise InvalidArgumentError(
            f"encoded columns need {frame.b.shape[0]} rows, got shape {c.shape}"
        )
    return c


def _origin(frame: FrameTransform, columns: NDArray[np.float64]) -> NDArray[np.float64]:
    return frame.b if columns.ndim == 1 else frame.b[:, None]


def to_global(frame: FrameTransform, local: NDArray[np.float64]) -> NDArray[np.float64]:
    """Map frame-local encoded column(s) to the global frame: A @ local + b."""
    c = _check_columns(frame, local)
    result: NDArray[np.float64] = frame.A @ c + _origin(frame, c)
    return result


def to_frame(frame: FrameTransform, global_: NDArray[np.float64]) -> NDArray[np.float64]:
    """Map global encoded column(s) into the frame: A^-1 @ (global - b)."""
    c = _check_columns(frame, global_)
    # A is block-orthogonal, so its inverse is its transpose.
    result: NDArray[np.float64] = frame.A.T @ (c - _origin(frame, c))
    return result


def rotate_control(frame: FrameTransform, u_local: NDArray[np.float64]) -> NDArray[np.float64]:
    """Express a frame-local pose rate globally: rotate position, pass angle rates."""
    u = np.asarray(u_local, dtype=np.float64)
    out = u.copy()
    out[:3] = frame.rotation @ u[:3]
    return out


def rotate_covariance(frame: FrameTransform, cov: NDArray[np.float64]) -> NDArray[np.float64]:
    """Express a frame-local 6 x 6 pose covariance globally: M @ cov @ M.T with M = diag(R, I)."""
    c = np.asarray(cov, dtype=np.float64)
    if c.shape != (POSE_DIM, POSE_DIM):
        raise InvalidArgumentError(f"pose covariance must be 6 x 6, got {c.shape}")
    M = frame.A[1:, 1:]
    rotated: NDArray[np.float64] = M @ c @ M.T
    return rotated


def pose_to_frame(frame: FrameTransform, pose: NDArray[np.float64]) -> NDArray[np.float64]:
    """Global pose vector(s) (..., 6) expressed in the frame, without the time entry."""
    p = np.asarray(pose, dtype=np.float64)
    flat = p.reshape(-1, POSE_DIM)
    encoded = np.vstack((np.zeros(flat.shape[0]), flat.T))
    local: NDArray[np.float64] = to_frame(frame, encoded)[1:].T.reshape(p.shape)
    return local


def poses_in_frames(
    poses: NDArray[np.float64], origins: NDArray[np.float64]
) -> NDArray[np.float64]:
    """Express pose i in the frame whose origin is origins[i], row by row (T x 6)."""
    p = np.asarray(poses, dtype=np.float64)
    o = np.asarray(origins, dtype=np.float64)
    if p.shape != o.shape or p.ndim != 2 or p.shape[1] != POSE_DIM:
        raise InvalidArgumentError(
            f"poses and origins must both be T x 6, got {p.shape} and {o.shape}"
        )
    R = Rotation.from_euler(EULER_SEQUENCE, o[:, 3:]).as_matrix()
    local = np.empty_like(p)
    local[:, :3] = np.einsum("kji,kj->ki", R, p[:, :3] - o[:, :3])
    local[:, 3:] = p[:, 3:] - o[:, 3:]
    return local


@dataclass(frozen=True)
class UnitQuaternion:
    """Rotation as a scalar-first unit quaternion."""

    w: float
    x: float
    y: float
    z: float

    def __post_init__(self) -> None:
        norm = float(np.sqrt(self.w**2 + self.x**2 + self.y**2 + self.z**2))
        if abs(norm - 1.0) > 1e-9:
            raise InvalidArgumentError(f"quaternion norm must be 1, got {norm}")

    def as_array(self) -> NDArray[np.float64]:
        """[w, x, y, z]."""
        return np.array([self.w, self.x, self.y, self.z])

    def dot(self, other: "UnitQuaternion") -> float:
        """Four-dimensional inner product."""
        return float(self.as_array() @ other.as_array())


def _from_scipy(xyzw: NDArray[np.float64]) -> UnitQuaternion:
    q = xyzw / np.linalg.norm(xyzw)
    if q[3] < 0:
        q = -q
    return UnitQuaternion(w=float(q[3]), x=float(q[0]), y=float(q[1]), z=float(q[2]))


def euler_to_quat(orientation: NDArray[np.float64] | Sequence[float]) -> UnitQuaternion:
    """Quaternion of a (roll, pitch, yaw) triple, sign chosen so that w >= 0."""
    angles = np.asarray(orientation, dtype=np.float64)
    if angles.shape != (3,) or not np.all(np.isfinite(angles)):
        raise InvalidArgumentError(f"orientation must be 3 finite angles, got {angles!r}")
    return _from_scipy(Rotation.from_euler(EULER_SEQUENCE, angles).as_quat())


def quat_to_matrix(q: UnitQuaternion) -> NDArray[np.float64]:
    """Rotation matrix of a quaternion."""
    matrix: NDArray[np.float64] = Rotation.from_quat([q.x, q.y, q.z, q.w]).as_matrix()
    return matrix


def matrix_to_quat(matrix: NDArray[np.float64]) -> UnitQuaternion:
    """Quaternion (w >= 0) of a rotation matrix."""
    return _from_scipy(Rotation.from_matrix(np.asarray(matrix, dtype=np.float64)).as_quat())


def _as_pose_array(poses: Sequence[Pose6] | NDArray[np.float64]) -> NDArray[np.float64]:
    if isinstance(poses, np.ndarray):
        arr = np.asarray(poses, dtype=np.float64)
    else:
        arr = np.array([p.as_array() for p in poses], dtype=np.float64)
    if arr.ndim != 2 or arr.shape[1] != POSE_DIM or arr.shape[0] < 1:
        raise InvalidArgumentError(f"path needs at least one 6-D pose, got shape {arr.shape}")
    return arr


def path_length(poses: Sequence[Pose6] | NDArray[np.float64]) -> tuple[float, float]:
    """Travelled distance of a pose sequence.

    Returns:
        Tuple of (translation in meters, rotation in radians), summing the
        Euclidean step lengths and the quaternion angles 2*arccos(|q_t . q_t+1|).
    """
    arr = _as_pose_array(poses)
    if arr.shape[0] == 1:
        return 0.0, 0.0
    translation = float(np.sum(np.linalg.norm(np.diff(arr[:, :3], axis=0), axis=1)))
    quats = Rotation.from_euler(EULER_SEQUENCE, arr[:, 3:]).as_quat()
    dots = np.abs(np.sum(quats[:-1] * quats[1:], axis=1))
    rotation = float(np.sum(2.0 * np.arccos(np.clip(dots, -1.0, 1.0))))
    return translation, rotation
