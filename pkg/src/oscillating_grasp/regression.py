"""Gaussian mixture regression on the time input."""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray
from scipy.special import logsumexp

from oscillating_grasp.errors import InvalidArgumentError
from oscillating_grasp.mixture import CombinedGMM, FrameGMM

logger = logging.getLogger(__name__)

Mixture = FrameGMM | CombinedGMM


@dataclass(frozen=True)
class ConditionalEstimate:
    """Reference pose mean and covariance for one time input."""

    mean: NDArray[np.float64]
    covariance: NDArray[np.float64]


@dataclass(frozen=True)
class ReferenceTrack:
    """GMR estimates for t = 1..T."""

    means: NDArray[np.float64]
    covariances: NDArray[np.float64]

    def __len__(self) -> int:
        return int(self.means.shape[0])

    def at(self, t: int) -> ConditionalEstimate:
        """Estimate at the 1-based time index t."""
        if not 1 <= t <= len(self):
            raise InvalidArgumentError(f"time index {t} outside 1..{len(self)}")
        return ConditionalEstimate(mean=self.means[t - 1], covariance=self.covariances[t - 1])


def activations(gmm: Mixture, t: float) -> NDArray[np.float64]:
    """Normalized responsibilities h_k(t) of each component for the time input.

    Computed in log-space. If every component's likelihood is zero the
    component whose time mean is closest to t takes all the weight.
    """
    means = gmm.means[:, 0]
    variances = gmm.covariances[:, 0, 0]
    log_h = (
        np.log(gmm.weights)
        - 0.5 * (np.log(2.0 * math.pi * variances) + (t - means) ** 2 / variances)
    )
    log_norm = logsumexp(log_h)
    if not np.isfinite(log_norm):
        logger.debug("All activations underflow at t=%s; using nearest component", t)
        nearest = np.zeros(gmm.n_components)
        nearest[int(np.argmin(np.abs(t - means)))] = 1.0
        return nearest
    h: NDArray[np.float64] = np.exp(log_h - log_norm)
    return h


def gmr(gmm: Mixture, t: float) -> ConditionalEstimate:
    """Condition the mixture on time t.

    Mean is the activation-weighted sum of the component conditional means.
    Covariance is the activation-weighted sum of the component conditional
    covariances, without the spread-of-means term.
    """
    if not math.isfinite(t):
        raise InvalidArgumentError(f"time input must be finite, got {t}")
    h = activations(gmm, t)
    d_out = gmm.dim - 1
    mean = np.zeros(d_out)
    covariance = np.zeros((d_out, d_out))
    for h_k, c in zip(h, gmm.components, strict=True):
        if h_k == 0.0:
            continue
        sigma_oi = c.covariance[1:, 0]
        sigma_ii = c.covariance[0, 0]
        gain = sigma_oi / sigma_ii
        mean += h_k * (c.mean[1:] + gain * (t - c.mean[0]))
        covariance += h_k * (c.covariance[1:, 1:] - np.outer(gain, sigma_oi))
    return ConditionalEstimate(mean=mean, covariance=0.5 * (covariance + covariance.T))


def gmr_track(gmm: Mixture, T: int) -> ReferenceTrack:
    """Evaluate gmr at t = 1..T."""
    if T < 2:
        raise InvalidArgumentError(f"horizon must be at least 2, got {T}")
    estimates = [gmr(gmm, float(t)) for t in range(1, T + 1)]
    return ReferenceTrack(
        means=np.array([e.mean for e in estimates]),
        covariances=np.array([e.covariance for e in estimates]),
    )
