"""Tests for EM fitting, frame splitting and Gaussian fusion."""

import json
import logging
from pathlib import Path

import numpy as np
import pytest

from oscillating_grasp.errors import (
    InvalidArgumentError,
    NumericalSingularityError,
    ParseError,
    SingularDataError,
)
from oscillating_grasp.geometry import (
    CONVENTION_TAG,
    FrameTransform,
    frame_from_pose,
    rotation_matrix,
)
from oscillating_grasp.mixture import (
    CombinedGMM,
    FrameGMM,
    GaussianComponent,
    JointGMM,
    ModelBundle,
    combine,
    fit_em,
    gaussian_product,
    load_model,
    save_model,
    split,
)
from oscillating_grasp.models import Pose6
from tests.conftest import duplicated_joint, frame_gmm, random_spd


def inverse_extended(matrix: np.ndarray) -> np.ndarray:
    """Gauss-Jordan inverse in extended precision."""
    n = matrix.shape[0]
    aug = np.hstack(
        (np.asarray(matrix, dtype=np.longdouble), np.eye(n, dtype=np.longdouble))
    )
    for col in range(n):
        pivot = col + int(np.argmax(np.abs(aug[col:, col])))
        aug[[col, pivot]] = aug[[pivot, col]]
        aug[col] /= aug[col, col]
        for row in range(n):
            if row != col:
                aug[row] -= aug[row, col] * aug[col]
    return aug[:, n:]


def product_oracle(
    means: list[np.ndarray], covariances: list[np.ndarray]
) -> tuple[np.ndarray, np.ndarray]:
    """Information-form product with explicit extended-precision inverses."""
    d = means[0].shape[0]
    info_matrix = np.zeros((d, d), dtype=np.longdouble)
    info_vector = np.zeros(d, dtype=np.longdouble)
    for mean, cov in zip(means, covariances, strict=True):
        precision = inverse_extended(cov)
        info_matrix += precision
        info_vector += precision @ np.asarray(mean, dtype=np.longdouble)
    cov = inverse_extended(info_matrix)
    return (cov @ info_vector).astype(np.float64), cov.astype(np.float64)


def random_frame(rng: np.random.Generator) -> FrameTransform:
    """Frame at a random pose."""
    position = rng.uniform(-1.0, 1.0, 3)
    orientation = rng.uniform(-np.pi, np.pi, 3)
    return frame_from_pose(Pose6.from_array(np.concatenate((position, orientation))))


def random_frame_gmm(rng: np.random.Generator, n_components: int = 2) -> FrameGMM:
    """Mixture over [time; pose] with random well-conditioned components."""
    return FrameGMM(
        components=[
            GaussianComponent(
                weight=1.0 / n_components,
                mean=rng.normal(size=7),
                covariance=random_spd(rng, 7, 0.1),
            )
            for _ in range(n_components)
        ]
    )


@pytest.fixture
def two_clusters() -> np.ndarray:
    """Time 1..100, value 0 in the first half and 10 in the second."""
    rng = np.random.default_rng(1)
    t = np.arange(1.0, 101.0)
    value = np.where(t <= 50, 0.0, 10.0) + rng.normal(scale=0.1, size=100)
    return np.column_stack((t, value))


class TestFitEM:
    """Expectation-maximization."""

    def test_recovers_clusters(self, two_clusters: np.ndarray) -> None:
        """Time-binned initialization separates the halves."""
        gmm = fit_em(two_clusters, n_components=2, seed=0)
        means = gmm.means[np.argsort(gmm.means[:, 0])]

        assert gmm.converged
        np.testing.assert_allclose(means[:, 1], [0.0, 10.0], atol=0.1)
        np.testing.assert_allclose(gmm.weights, [0.5, 0.5], atol=1e-6)

    def test_log_likelihood_does_not_decrease(self, two_clusters: np.ndarray) -> None:
        """EM improves the data log-likelihood at every iteration."""
        gmm = fit_em(two_clusters, n_components=3, seed=0)
        assert np.all(np.diff(gmm.log_likelihood) >= -1e-6)

    def test_deterministic(self, two_clusters: np.ndarray) -> None:
        """Same seed, same model."""
        a = fit_em(two_clusters, n_components=3, seed=4)
        b = fit_em(two_clusters, n_components=3, seed=4)
        np.testing.assert_array_equal(a.means, b.means)
        np.testing.assert_array_equal(a.covariances, b.covariances)

    def test_covariance_floor(self, two_clusters: np.ndarray) -> None:
        """Every covariance is symmetric positive definite."""
        gmm = fit_em(two_clusters, n_components=2, seed=0, floor=1e-3)
        for cov in gmm.covariances:
            np.testing.assert_allclose(cov, cov.T)
            assert np.min(np.linalg.eigvalsh(cov)) >= 1e-3 - 1e-12

    def test_iteration_cap(
        self, two_clusters: np.ndarray, caplog: pytest.LogCaptureFixture
    ) -> None:
        """Hitting the cap clears the converged flag and warns."""
        with caplog.at_level(logging.WARNING, logger="oscillating_grasp.mixture"):
            gmm = fit_em(two_clusters, n_components=2, seed=0, max_iterations=1)

        assert not gmm.converged
        assert len(gmm.log_likelihood) == 1
        assert "did not converge" in caplog.text

    def test_identical_samples(self) -> None:
        """Degenerate data."""
        with pytest.raises(SingularDataError):
            fit_em(np.ones((50, 3)), n_components=2, seed=0)

    def test_too_few_samples(self) -> None:
        """N must cover K (d + 1)."""
        with pytest.raises(InvalidArgumentError):
            fit_em(np.random.default_rng(0).normal(size=(5, 3)), n_components=2, seed=0)

    def test_frame_layout(self, two_clusters: np.ndarray) -> None:
        """d - 1 must split into J equal blocks."""
        samples = np.column_stack((two_clusters, two_clusters[:, 1]))
        with pytest.raises(InvalidArgumentError):
            fit_em(samples, n_components=2, seed=0, n_frames=3)


class TestModel:
    """Fitted model on the synthetic set."""

    def test_layout(self, model: ModelBundle) -> None:
        """Six components over [time; start frame; end frame]."""
        assert model.joint.n_components == 6
        assert model.joint.n_frames == 2
        assert model.joint.dim == 13
        assert model.joint.frame_dim == 6
        assert model.horizon == 200
        assert len(model.fingerprint) == 64
        assert model.joint.weights.sum() == pytest.approx(1.0)

    def test_mixed_dimensions(self) -> None:
        """Components of one mixture share a dimension."""
        with pytest.raises(InvalidArgumentError):
            JointGMM(
                components=[
                    GaussianComponent(weight=0.5, mean=np.zeros(3), covariance=np.eye(3)),
                    GaussianComponent(weight=0.5, mean=np.zeros(5), covariance=np.eye(5)),
                ]
            )

    def test_split(self, model: ModelBundle) -> None:
        """Frame marginals keep the time entry and their own block."""
        start, end = split(model.joint)
        component = model.joint.components[2]
        assert start.frame_id == 0 and end.frame_id == 1
        np.testing.assert_array_equal(end.components[2].mean[1:], component.mean[7:])
        assert end.components[2].mean[0] == component.mean[0]
        np.testing.assert_array_equal(
            start.components[2].covariance[1:, 1:], component.covariance[1:7, 1:7]
        )


class TestGaussianProduct:
    """Information-form fusion."""

    @pytest.mark.parametrize("d", [3, 7])
    def test_matches_oracle(self, d: int) -> None:
        """Random two-input cases against explicit extended-precision inverses."""
        rng = np.random.default_rng(d)
        for _ in range(500):
            covs = [random_spd(rng, d, 0.1), random_spd(rng, d, 0.1)]
            means = [rng.normal(size=d), rng.normal(size=d)]
            mean, cov = gaussian_product(means, covs)

            oracle_mean, oracle_cov = product_oracle(means, covs)
            np.testing.assert_allclose(cov, oracle_cov, rtol=0, atol=1e-9)
            np.testing.assert_allclose(mean, oracle_mean, rtol=0, atol=1e-9)

    def test_rotated_three_dimensional_inputs(self) -> None:
        """Two 3-D Gaussians placed by random rotations and offsets."""
        rng = np.random.default_rng(33)
        for _ in range(500):
            means, covs = [], []
            for _ in range(2):
                R = rotation_matrix(rng.uniform(-np.pi, np.pi, 3))
                local = random_spd(rng, 3, 0.1)
                means.append(R @ rng.normal(size=3) + rng.uniform(-1.0, 1.0, 3))
                covs.append(R @ local @ R.T)
            mean, cov = gaussian_product(means, covs)

            oracle_mean, oracle_cov = product_oracle(means, covs)
            np.testing.assert_allclose(cov, oracle_cov, rtol=0, atol=1e-9)
            np.testing.assert_allclose(mean, oracle_mean, rtol=0, atol=1e-9)

    def test_equal_inputs(self) -> None:
        """Two equal Gaussians: same mean, half the covariance."""
        cov = np.diag([1.0, 2.0, 4.0])
        mean = np.array([1.0, -1.0, 0.5])
        fused_mean, fused_cov = gaussian_product([mean, mean], [cov, cov])
        np.testing.assert_allclose(fused_mean, mean)
        np.testing.assert_allclose(fused_cov, cov / 2)

    def test_singular_input(self) -> None:
        """A singular covariance is reported with its index."""
        with pytest.raises(NumericalSingularityError, match="input 1"):
            gaussian_product([np.zeros(2), np.zeros(2)], [np.eye(2), np.zeros((2, 2))])

    def test_mismatched_inputs(self) -> None:
        """Means and covariances must pair up."""
        with pytest.raises(InvalidArgumentError):
            gaussian_product([np.zeros(2)], [])


class TestCombine:
    """Fusion of frame mixtures for the current frames."""

    def test_single_frame_transforms_component(self) -> None:
        """With one frame the product is the transformed component."""
        gmm = frame_gmm()
        frame = frame_from_pose(Pose6(position=(0.1, 0.2, 0.3), orientation=(0.0, 0.4, 0.8)))
        combined = combine([gmm], [frame])

        assert isinstance(combined, CombinedGMM)
        for c, fused in zip(gmm.components, combined.components, strict=True):
            np.testing.assert_allclose(fused.mean, frame.A @ c.mean + frame.b, atol=1e-7)
            np.testing.assert_allclose(
                fused.covariance, frame.A @ c.covariance @ frame.A.T, atol=1e-6
            )
            assert fused.weight == c.weight

    def test_identical_frames_halve_covariance(self) -> None:
        """Two identical frame mixtures at one frame."""
        start, end = split(duplicated_joint(frame_gmm()))
        frame = FrameTransform.identity()
        combined = combine([start, end], [frame, frame])
        for c, fused in zip(start.components, combined.components, strict=True):
            np.testing.assert_allclose(fused.mean, c.mean, atol=1e-7)
            np.testing.assert_allclose(fused.covariance, c.covariance / 2, atol=1e-6)

    def test_matches_extended_oracle(self) -> None:
        """Two random frames: transform, multiply, compare with explicit inverses."""
        rng = np.random.default_rng(71)
        for _ in range(250):
            gmms = [random_frame_gmm(rng), random_frame_gmm(rng)]
            frames = [random_frame(rng), random_frame(rng)]
            combined = combine(gmms, frames)

            for k, fused in enumerate(combined.components):
                pairs = list(zip(gmms, frames, strict=True))
                means = [f.A @ g.components[k].mean + f.b for g, f in pairs]
                covs = [f.A @ g.components[k].covariance @ f.A.T for g, f in pairs]
                oracle_mean, oracle_cov = product_oracle(means, covs)
                np.testing.assert_allclose(fused.covariance, oracle_cov, rtol=0, atol=1e-9)
                np.testing.assert_allclose(fused.mean, oracle_mean, rtol=0, atol=1e-9)
                precision_sum = sum(inverse_extended(c) for c in covs)
                np.testing.assert_allclose(
                    inverse_extended(fused.covariance).astype(np.float64),
                    precision_sum.astype(np.float64),
                    rtol=1e-9,
                    atol=1e-9,
                )

    def test_frame_order_irrelevant(self) -> None:
        """Permuting the (mixture, frame) pairs gives the same fusion."""
        rng = np.random.default_rng(72)
        gmms = [random_frame_gmm(rng), random_frame_gmm(rng)]
        frames = [random_frame(rng), random_frame(rng)]
        forward = combine(gmms, frames)
        backward = combine(gmms[::-1], frames[::-1])
        np.testing.assert_allclose(forward.means, backward.means, rtol=0, atol=1e-12)
        np.testing.assert_allclose(forward.covariances, backward.covariances, rtol=0, atol=1e-12)
        np.testing.assert_array_equal(forward.weights, backward.weights)

    def test_shifted_origins_shift_mean(self) -> None:
        """Moving every frame origin by c moves the means by c and keeps the covariances."""
        rng = np.random.default_rng(73)
        gmms = [random_frame_gmm(rng), random_frame_gmm(rng)]
        frames = [random_frame(rng), random_frame(rng)]
        shift = np.concatenate(([0.0], rng.normal(size=6)))
        moved = [FrameTransform(A=f.A, b=f.b + shift) for f in frames]

        base = combine(gmms, frames)
        shifted = combine(gmms, moved)
        np.testing.assert_allclose(shifted.means, base.means + shift, rtol=0, atol=1e-9)
        np.testing.assert_allclose(shifted.covariances, base.covariances, rtol=0, atol=1e-12)

    def test_frame_count_mismatch(self) -> None:
        """One frame per mixture."""
        with pytest.raises(InvalidArgumentError):
            combine([frame_gmm()], [FrameTransform.identity()] * 2)

    def test_names_singular_component(self) -> None:
        """A component that cannot be inverted is named."""
        bad = GaussianComponent(weight=1.0, mean=np.zeros(7), covariance=np.zeros((7, 7)))
        gmm = FrameGMM(components=[bad])
        with pytest.raises(NumericalSingularityError, match="component 0"):
            combine([gmm], [FrameTransform.identity()])


class TestModelFiles:
    """Model serialization."""

    def test_roundtrip_is_lossless(self, model: ModelBundle, tmp_path: Path) -> None:
        """save_model then load_model reproduces every number."""
        path = tmp_path / "model.json"
        save_model(model, path)
        loaded = load_model(path)

        np.testing.assert_array_equal(loaded.joint.weights, model.joint.weights)
        np.testing.assert_array_equal(loaded.joint.means, model.joint.means)
        np.testing.assert_array_equal(loaded.joint.covariances, model.joint.covariances)
        assert loaded.joint.n_frames == 2
        assert loaded.horizon == model.horizon
        assert loaded.fingerprint == model.fingerprint
        assert loaded.convention == CONVENTION_TAG
        assert loaded.joint.log_likelihood == model.joint.log_likelihood

    def _write(self, path: Path, **changes: object) -> None:
        joint = JointGMM(
            components=[GaussianComponent(weight=1.0, mean=np.zeros(7), covariance=np.eye(7))],
            n_frames=1,
        )
        save_model(ModelBundle(joint=joint, horizon=10), path)
        document = json.loads(path.read_text())
        document.update(changes)
        path.write_text(json.dumps(document))

    def test_missing_file(self, tmp_path: Path) -> None:
        """Missing model is a file error."""
        with pytest.raises(FileNotFoundError):
            load_model(tmp_path / "none.json")

    def test_bad_json(self, tmp_path: Path) -> None:
        """Broken JSON reports its line."""
        path = tmp_path / "model.json"
        path.write_text("{\n  not json\n}")
        with pytest.raises(ParseError) as excinfo:
            load_model(path)
        assert excinfo.value.line == 2

    @pytest.mark.parametrize(
        "changes, field",
        [
            ({"format_version": 2}, "format_version"),
            ({"convention": "intrinsic-zyx"}, "convention"),
            ({"weights": [0.5, 0.5]}, "weights"),
            ({"means": [[0.0, 0.0]]}, "means"),
            ({"covariances": [[1.0, 0.0, 0.0]]}, "covariances"),
            ({"D": 2}, "D"),
        ],
    )
    def test_invalid_document(
        self, tmp_path: Path, changes: dict[str, object], field: str
    ) -> None:
        """Each inconsistency names its field."""
        path = tmp_path / "model.json"
        self._write(path, **changes)
        with pytest.raises(ParseError) as excinfo:
            load_model(path)
        assert excinfo.value.field == field
