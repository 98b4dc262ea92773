"""Discrete-time LQR for the integrator plant.

Two flavours are provided: a one-step gain computed from the current precision
only, and a finite-horizon backward recursion with an affine control law that
tracks a time-varying reference.
"""

import logging
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.linalg import LinAlgError, cho_factor, cho_solve

from oscillating_grasp.config import get_config
from oscillating_grasp.errors import InvalidArgumentError, NumericalSingularityError
from oscillating_grasp.models import CostSpec, SystemModel
from oscillating_grasp.regression import ReferenceTrack

logger = logging.getLogger(__name__)

_PSD_TOL = 1e-12


def spectral_radius(matrix: NDArray[np.float64]) -> float:
    """Largest eigenvalue magnitude."""
    return float(np.max(np.abs(np.linalg.eigvals(matrix))))


def precision(covariance: NDArray[np.float64], floor: float | None = None) -> NDArray[np.float64]:
    """Inverse of a covariance after adding the diagonal floor.

    Raises:
        NumericalSingularityError: The floored covariance is not positive definite
    """
    if floor is None:
        floor = get_config().covariance_floor
    d = covariance.shape[0]
    try:
        factor = cho_factor(covariance + floor * np.eye(d), lower=True)
    except LinAlgError:
        raise NumericalSingularityError("covariance is not positive definite") from None
    Q: NDArray[np.float64] = cho_solve(factor, np.eye(d))
    return 0.5 * (Q + Q.T)


def _solve_spd(M: NDArray[np.float64], rhs: NDArray[np.float64], what: str) -> NDArray[np.float64]:
    try:
        factor = cho_factor(M, lower=True)
    except LinAlgError:
        raise NumericalSingularityError(f"{what} is not positive definite") from None
    solution: NDArray[np.float64] = cho_solve(factor, rhs)
    return solution


def gain_infinite(
    Q: NDArray[np.float64], cost: CostSpec, model: SystemModel
) -> NDArray[np.float64]:
    """One-step feedback gain from the precision at the current tick.

    P is a single evaluation of the Riccati update from Q rather than its fixed
    point: P = Q - A^T (Q B (B^T Q B + R)^-1 B^T Q - Q) A, then
    K = (R + B^T P B)^-1 B^T P A.

    Raises:
        InvalidArgumentError: Q is not symmetric positive semi-definite
    """
    Q = np.asarray(Q, dtype=np.float64)
    scale = max(1.0, float(np.max(np.abs(Q))))
    if Q.shape != (model.A.shape[0],) * 2 or not np.allclose(Q, Q.T, rtol=0.0, atol=1e-9 * scale):
        raise InvalidArgumentError("Q must be a symmetric matrix matching the system")
    if np.min(np.linalg.eigvalsh(Q)) < -_PSD_TOL * scale:
        raise InvalidArgumentError("Q must be positive semi-definite")
    A, B, R = model.A, model.B, cost.R
    QB = Q @ B
    inner = _solve_spd(B.T @ QB + R, QB.T, "B^T Q B + R")
    P = Q - A.T @ (QB @ inner - Q) @ A
    P = 0.5 * (P + P.T)
    return _solve_spd(R + B.T @ P @ B, B.T @ P @ A, "R + B^T P B")


def control_infinite(
    K: NDArray[np.float64], mu: NDArray[np.float64], x: NDArray[np.float64]
) -> NDArray[np.float64]:
    """u = K (mu - x)."""
    u: NDArray[np.float64] = K @ (mu - x)
    return u


@dataclass(frozen=True)
class FiniteSchedule:
    """Gains of a finite-horizon tracking LQR.

    feedback[t-1] and feedforward[t-1] hold the gains of tick t = 1..T-1;
    outputs[t-1] and riccati[t-1] hold v_t and S_t for t = 1..T.
    """

    horizon: int
    feedback: NDArray[np.float64]
    feedforward: NDArray[np.float64]
    outputs: NDArray[np.float64]
    riccati: NDArray[np.float64]
    model: SystemModel

    def __post_init__(self) -> None:
        T = self.horizon
        if self.feedback.shape[0] != T - 1 or self.feedforward.shape[0] != T - 1:
            raise InvalidArgumentError("gain arrays must cover t = 1..T-1")
        if self.outputs.shape[0] != T or self.riccati.shape[0] != T:
            raise InvalidArgumentError("output arrays must cover t = 1..T")

    @property
    def terminal(self) -> NDArray[np.float64]:
        """S_T."""
        return self.riccati[-1]

    def closed_loop(self, t: int) -> NDArray[np.float64]:
        """A - B K_t for the tick t."""
        closed: NDArray[np.float64] = self.model.A - self.model.B @ self.feedback[t - 1]
        return closed


def fit_finite(
    track: ReferenceTrack, cost: CostSpec, model: SystemModel, floor: float | None = None
) -> FiniteSchedule:
    """Backward recursion of the finite-horizon tracking LQR.

    Starts from S_T = Q_T and v_T = Q_T mu_T with Q_t the floored precision of
    the reference covariance, then for t = T-1..1:
    K^V_t = M^-1 B^T, K^P_t = M^-1 B^T S_t+1 A with M = R + B^T S_t+1 B,
    S_t = A^T S_t+1 (A - B K^P_t) + Q_t and v_t = (A - B K^P_t)^T v_t+1 + Q_t mu_t.

    Args:
        track: Reference means and covariances for t = 1..T
        cost: Control cost
        model: Integrator plant
        floor: Diagonal floor added before inverting the covariances

    Returns:
        FiniteSchedule over the track's horizon
    """
    T = len(track)
    if T < 2:
        raise InvalidArgumentError(f"horizon must be at least 2, got {T}")
    A, B, R = model.A, model.B, cost.R
    n = A.shape[0]
    Qs = []
    for t in range(1, T + 1):
        try:
            Qs.append(precision(track.covariances[t - 1], floor))
        except NumericalSingularityError:
            raise NumericalSingularityError(
                f"tick {t}: reference covariance is not positive definite"
            ) from None

    feedback = np.empty((T - 1, n, n))
    feedforward = np.empty((T - 1, n, n))
    outputs = np.empty((T, n))
    riccati = np.empty((T, n, n))
    riccati[-1] = Qs[-1]
    outputs[-1] = Qs[-1] @ track.means[-1]

    for t in range(T - 1, 0, -1):
        S_next = riccati[t]
        M = R + B.T @ S_next @ B
        try:
            factor = cho_factor(M, lower=True)
        except LinAlgError:
            raise NumericalSingularityError(
                f"tick {t}: R + B^T S B is not positive definite"
            ) from None
        K_V = cho_solve(factor, B.T)
        K_P = cho_solve(factor, B.T @ S_next @ A)
        closed = A - B @ K_P
        S = A.T @ S_next @ closed + Qs[t - 1]
        feedback[t - 1] = K_P
        feedforward[t - 1] = K_V
        riccati[t - 1] = 0.5 * (S + S.T)
        outputs[t - 1] = closed.T @ outputs[t] + Qs[t - 1] @ track.means[t - 1]

    logger.debug("Finite-horizon schedule fitted (T=%d, rho=%s)", T, cost.rho)
    return FiniteSchedule(
        horizon=T,
        feedback=feedback,
        feedforward=feedforward,
        outputs=outputs,
        riccati=riccati,
        model=model,
    )


def control_finite(schedule: FiniteSchedule, t: int, x: NDArray[np.float64]) -> NDArray[np.float64]:
    """Affine control u = -K^P_t x + K^V_t v_t+1 for 1 <= t < T."""
    if not 1 <= t < schedule.horizon:
        raise InvalidArgumentError(f"time index {t} outside 1..{schedule.horizon - 1}")
    feedforward = schedule.feedforward[t - 1] @ schedule.outputs[t]
    u: NDArray[np.float64] = -schedule.feedback[t - 1] @ x + feedforward
    return u
