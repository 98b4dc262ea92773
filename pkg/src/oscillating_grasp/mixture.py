"""Gaussian mixture models over task encodings.

Fits a joint model with EM, splits it into per-frame models and fuses the
per-frame models for the current frame placement with a product of linearly
transformed Gaussians.
"""

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel, Field, ValidationError
from scipy.linalg import LinAlgError, cho_factor, cho_solve, cholesky, solve_triangular
from scipy.special import logsumexp

from oscillating_grasp.config import get_config
from oscillating_grasp.demos import DemoSet, encode, fingerprint, pooled_samples
from oscillating_grasp.errors import (
    InvalidArgumentError,
    NumericalSingularityError,
    ParseError,
    SingularDataError,
)
from oscillating_grasp.geometry import CONVENTION_TAG, FrameTransform
from oscillating_grasp.models import POSE_DIM

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1
_LOG_2PI = math.log(2.0 * math.pi)


@dataclass(frozen=True)
class GaussianComponent:
    """Weighted Gaussian N(mean, covariance)."""

    weight: float
    mean: NDArray[np.float64]
    covariance: NDArray[np.float64]

    @property
    def dim(self) -> int:
        """Dimension of the component."""
        return int(self.mean.shape[0])


@dataclass(frozen=True)
class _Mixture:
    components: list[GaussianComponent]

    def __post_init__(self) -> None:
        if not self.components:
            raise InvalidArgumentError("a mixture needs at least one component")
        dims = {c.dim for c in self.components}
        if len(dims) != 1:
            raise InvalidArgumentError(f"components have mixed dimensions {sorted(dims)}")

    @property
    def n_components(self) -> int:
        """K."""
        return len(self.components)

    @property
    def dim(self) -> int:
        """Dimension of every component."""
        return self.components[0].dim

    @property
    def weights(self) -> NDArray[np.float64]:
        """Mixing weights, shape (K,)."""
        return np.array([c.weight for c in self.components])

    @property
    def means(self) -> NDArray[np.float64]:
        """Component means, shape (K, d)."""
        return np.array([c.mean for c in self.components])

    @property
    def covariances(self) -> NDArray[np.float64]:
        """Component covariances, shape (K, d, d)."""
        return np.array([c.covariance for c in self.components])


@dataclass(frozen=True)
class JointGMM(_Mixture):
    """Mixture over [time; pose in every frame]."""

    n_frames: int = 1
    converged: bool = True
    log_likelihood: list[float] = field(default_factory=list)

    @property
    def frame_dim(self) -> int:
        """Pose dimension D of one frame block."""
        return (self.dim - 1) // self.n_frames


@dataclass(frozen=True)
class FrameGMM(_Mixture):
    """Mixture over [time; pose in one frame]."""

    frame_id: int = 0


@dataclass(frozen=True)
class CombinedGMM(_Mixture):
    """Per-frame mixtures fused for one timestep's frame placement."""


@dataclass(frozen=True)
class ModelBundle:
    """A fitted joint model with the metadata saved alongside it."""

    joint: JointGMM
    horizon: int
    fingerprint: str = ""
    convention: str = CONVENTION_TAG


def _log_gaussian(
    samples: NDArray[np.float64], mean: NDArray[np.float64], covariance: NDArray[np.float64]
) -> NDArray[np.float64]:
    L = cholesky(covariance, lower=True)
    z = solve_triangular(L, (samples - mean).T, lower=True)
    log_det = 2.0 * float(np.sum(np.log(np.diag(L))))
    mahalanobis = np.sum(z * z, axis=0)
    logpdf: NDArray[np.float64] = -0.5 * (mahalanobis + mean.shape[0] * _LOG_2PI + log_det)
    return logpdf


def _weighted_log_densities(
    samples: NDArray[np.float64],
    weights: NDArray[np.float64],
    means: NDArray[np.float64],
    covariances: NDArray[np.float64],
) -> NDArray[np.float64]:
    columns = []
    for k in range(weights.shape[0]):
        try:
            columns.append(np.log(weights[k]) + _log_gaussian(samples, means[k], covariances[k]))
        except LinAlgError:
            raise NumericalSingularityError(
                f"component {k}: covariance is not positive definite"
            ) from None
    return np.column_stack(columns)


def _time_binned_init(
    samples: NDArray[np.float64], K: int, seed: int, floor: float
) -> tuple[NDArray[np.float64], NDArray[np.float64], NDArray[np.float64]]:
    """Initialize from K equal bins of samples sorted by the time entry."""
    N, d = samples.shape
    rng = np.random.default_rng(seed)
    order = np.lexsort((rng.random(N), samples[:, 0]))
    weights, means, covariances = [], [], []
    for members in np.array_split(order, K):
        chunk = samples[members]
        weights.append(chunk.shape[0] / N)
        means.append(chunk.mean(axis=0))
        covariances.append(np.cov(chunk.T, bias=True).reshape(d, d) + floor * np.eye(d))
    return np.array(weights), np.array(means), np.array(covariances)


def fit_em(
    samples: NDArray[np.float64],
    n_components: int | None = None,
    seed: int | None = None,
    n_frames: int = 1,
    floor: float | None = None,
    tolerance: float | None = None,
    max_iterations: int | None = None,
) -> JointGMM:
    """Fit a Gaussian mixture with expectation-maximization.

    Components start from time-binned statistics, every M-step adds the
    covariance floor to the diagonal, and iteration stops when the mean
    per-sample log-likelihood improves by less than the tolerance.

    Args:
        samples: N x d sample matrix with the time entry in column 0
        n_components: K, defaults to the configured component count
        seed: Tie-breaking seed for the initial time sort
        n_frames: Number of frame blocks J in a sample
        floor: Diagonal covariance regularization
        tolerance: Log-likelihood improvement that counts as converged
        max_iterations: Iteration cap; hitting it clears the converged flag

    Returns:
        JointGMM holding the best iterate and the log-likelihood history
    """
    config = get_config()
    K = config.n_components if n_components is None else n_components
    seed = config.fit_seed if seed is None else seed
    floor = config.covariance_floor if floor is None else floor
    tolerance = config.em_tolerance if tolerance is None else tolerance
    max_iterations = config.em_max_iterations if max_iterations is None else max_iterations

    X = np.asarray(samples, dtype=np.float64)
    if X.ndim != 2:
        raise InvalidArgumentError(f"samples must be N x d, got shape {X.shape}")
    N, d = X.shape
    if K < 1:
        raise InvalidArgumentError(f"need at least one component, got {K}")
    if N < K * (d + 1):
        raise InvalidArgumentError(f"{N} samples are too few for {K} components of dimension {d}")
    if n_frames < 1 or (d - 1) % n_frames != 0:
        raise InvalidArgumentError(f"dimension {d} does not hold {n_frames} frame blocks")
    if not np.all(np.isfinite(X)):
        raise InvalidArgumentError("samples contain non-finite entries")
    if np.all(X == X[0]):
        raise SingularDataError("all samples are identical")

    weights, means, covariances = _time_binned_init(X, K, seed, floor)
    history: list[float] = []
    best = (weights, means, covariances)
    best_ll = -math.inf
    converged = False

    for iteration in range(max_iterations):
        log_p = _weighted_log_densities(X, weights, means, covariances)
        log_norm = logsumexp(log_p, axis=1)
        ll = float(np.mean(log_norm))
        history.append(ll)
        logger.debug("EM iteration %d: mean log-likelihood %.10f", iteration, ll)
        if ll > best_ll:
            best_ll, best = ll, (weights, means, covariances)
        if iteration > 0 and ll - history[-2] < tolerance:
            converged = True
            break

        resp = np.exp(log_p - log_norm[:, None])
        Nk = resp.sum(axis=0) + 10.0 * np.finfo(np.float64).eps
        weights = Nk / Nk.sum()
        means = (resp.T @ X) / Nk[:, None]
        covariances = np.empty((K, d, d))
        for k in range(K):
            diff = X - means[k]
            cov = (resp[:, k, None] * diff).T @ diff / Nk[k]
            covariances[k] = 0.5 * (cov + cov.T) + floor * np.eye(d)

    if not converged:
        logger.warning(
            "EM did not converge within %d iterations; returning best iterate", max_iterations
        )

    weights, means, covariances = best
    components = [
        GaussianComponent(
            weight=float(weights[k]), mean=means[k].copy(), covariance=covariances[k].copy()
        )
        for k in range(K)
    ]
    logger.info(
        "Fitted %d-component GMM on %d samples (d=%d, %d iterations, converged=%s)",
        K,
        N,
        d,
        len(history),
        converged,
    )
    return JointGMM(
        components=components, n_frames=n_frames, converged=converged, log_likelihood=history
    )


def fit_model(
    demo_set: DemoSet, n_components: int | None = None, seed: int | None = None
) -> ModelBundle:
    """Encode a demonstration set in its frames and fit the joint model."""
    encodings = encode(demo_set)
    joint = fit_em(
        pooled_samples(encodings),
        n_components=n_components,
        seed=seed,
        n_frames=encodings[0].n_frames,
    )
    return ModelBundle(joint=joint, horizon=demo_set.common_T, fingerprint=fingerprint(demo_set))


def split(joint: JointGMM) -> list[FrameGMM]:
    """Marginalize the joint model onto [time; frame j] for every frame."""
    D = joint.frame_dim
    out = []
    for j in range(joint.n_frames):
        idx = np.concatenate(([0], np.arange(1 + j * D, 1 + (j + 1) * D)))
        components = [
            GaussianComponent(
                weight=c.weight,
                mean=c.mean[idx],
                covariance=c.covariance[np.ix_(idx, idx)],
            )
            for c in joint.components
        ]
        out.append(FrameGMM(components=components, frame_id=j))
    return out


def _precision(covariance: NDArray[np.float64]) -> NDArray[np.float64]:
    factor = cho_factor(covariance, lower=True)
    precision: NDArray[np.float64] = cho_solve(factor, np.eye(covariance.shape[0]))
    return precision


def gaussian_product(
    means: list[NDArray[np.float64]], covariances: list[NDArray[np.float64]]
) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    """Product of Gaussians in information form.

    Returns:
        Tuple of (mean, covariance) with precision equal to the sum of the
        input precisions.

    Raises:
        NumericalSingularityError: An input or the summed precision is not
            positive definite
    """
    if not means or len(means) != len(covariances):
        raise InvalidArgumentError("need matching, nonempty lists of means and covariances")
    d = means[0].shape[0]
    info_matrix = np.zeros((d, d))
    info_vector = np.zeros(d)
    for i, (mean, cov) in enumerate(zip(means, covariances, strict=True)):
        try:
            precision = _precision(cov)
        except LinAlgError:
            raise NumericalSingularityError(
                f"input {i}: covariance is not positive definite"
            ) from None
        info_matrix += precision
        info_vector += precision @ mean
    try:
        factor = cho_factor(0.5 * (info_matrix + info_matrix.T), lower=True)
    except LinAlgError:
        raise NumericalSingularityError("summed precision is not positive definite") from None
    covariance = cho_solve(factor, np.eye(d))
    mean = cho_solve(factor, info_vector)
    return mean, 0.5 * (covariance + covariance.T)


def combine(frame_gmms: list[FrameGMM], frames_at_t: list[FrameTransform]) -> CombinedGMM:
    """Fuse per-frame mixtures for the frames' current placement.

    Each component is mapped to the global frame with A_j mu + b_j and
    A_j Sigma A_j^T, and the J transformed Gaussians are multiplied.
    """
    if not frame_gmms or len(frame_gmms) != len(frames_at_t):
        raise InvalidArgumentError(
            f"need one frame per mixture, got {len(frame_gmms)} mixtures "
            f"and {len(frames_at_t)} frames"
        )
    K = frame_gmms[0].n_components
    if any(g.n_components != K for g in frame_gmms):
        raise InvalidArgumentError("frame mixtures have different component counts")
    if any(g.dim != f.b.shape[0] for g, f in zip(frame_gmms, frames_at_t, strict=True)):
        raise InvalidArgumentError("frame mixture dimension does not match the frame transform")

    components = []
    for k in range(K):
        means = []
        covariances = []
        for gmm, frame in zip(frame_gmms, frames_at_t, strict=True):
            c = gmm.components[k]
            means.append(frame.A @ c.mean + frame.b)
            covariances.append(frame.A @ c.covariance @ frame.A.T)
        try:
            mean, cov = gaussian_product(means, covariances)
        except NumericalSingularityError as exc:
            raise NumericalSingularityError(f"component {k}: {exc}") from None
        components.append(
            GaussianComponent(weight=frame_gmms[0].components[k].weight, mean=mean, covariance=cov)
        )
    return CombinedGMM(components=components)


class ModelFile(BaseModel):
    """On-disk schema of a fitted model."""

    format_version: int
    convention: str
    K: int = Field(ge=1)
    J: int = Field(ge=1)
    D: int = Field(ge=1)
    horizon: int = Field(ge=2)
    fingerprint: str = ""
    weights: list[float]
    means: list[list[float]]
    covariances: list[list[float]] = Field(description="Row-major d*d entries per component")
    converged: bool = True
    log_likelihood: list[float] = Field(default_factory=list)


def save_model(bundle: ModelBundle, path: Path) -> None:
    """Write a model bundle as versioned JSON with round-trip exact floats."""
    joint = bundle.joint
    document = ModelFile(
        format_version=MODEL_FORMAT_VERSION,
        convention=bundle.convention,
        K=joint.n_components,
        J=joint.n_frames,
        D=joint.frame_dim,
        horizon=bundle.horizon,
        fingerprint=bundle.fingerprint,
        weights=[float(w) for w in joint.weights],
        means=[[float(v) for v in c.mean] for c in joint.components],
        covariances=[[float(v) for v in c.covariance.ravel()] for c in joint.components],
        converged=joint.converged,
        log_likelihood=list(joint.log_likelihood),
    )
    path.parent.mkdir(parents=True, exist_ok=True)
    # json.dumps writes floats with repr, which round-trips exactly
    path.write_text(json.dumps(document.model_dump(), indent=2) + "\n")
    logger.info("Saved %d-component model to %s", joint.n_components, path)


def load_model(path: Path) -> ModelBundle:
    """Read a model bundle written by save_model."""
    if not path.exists():
        raise FileNotFoundError(f"Model file not found: {path}")
    try:
        document = ModelFile.model_validate(json.loads(path.read_text()))
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, path=str(path), line=exc.lineno) from None
    except ValidationError as exc:
        first = exc.errors()[0]
        raise ParseError(
            first["msg"], path=str(path), field=".".join(str(p) for p in first["loc"])
        ) from None

    if document.format_version != MODEL_FORMAT_VERSION:
        raise ParseError(
            f"unsupported format version {document.format_version}",
            path=str(path),
            field="format_version",
        )
    if document.convention != CONVENTION_TAG:
        raise ParseError(
            f"angle convention '{document.convention}' is not '{CONVENTION_TAG}'",
            path=str(path),
            field="convention",
        )
    if document.D != POSE_DIM:
        raise ParseError(
            f"frame blocks must have {POSE_DIM} pose entries, got {document.D}",
            path=str(path),
            field="D",
        )
    d = 1 + document.J * document.D
    for name in ("weights", "means", "covariances"):
        if len(getattr(document, name)) != document.K:
            raise ParseError(f"expected {document.K} entries", path=str(path), field=name)
    for k in range(document.K):
        if len(document.means[k]) != d:
            raise ParseError(f"mean {k} must have {d} entries", path=str(path), field="means")
        if len(document.covariances[k]) != d * d:
            raise ParseError(
                f"covariance {k} must have {d * d} entries", path=str(path), field="covariances"
            )

    components = [
        GaussianComponent(
            weight=document.weights[k],
            mean=np.array(document.means[k], dtype=np.float64),
            covariance=np.array(document.covariances[k], dtype=np.float64).reshape(d, d),
        )
        for k in range(document.K)
    ]
    joint = JointGMM(
        components=components,
        n_frames=document.J,
        converged=document.converged,
        log_likelihood=document.log_likelihood,
    )
    return ModelBundle(
        joint=joint,
        horizon=document.horizon,
        fingerprint=document.fingerprint,
        convention=document.convention,
    )
