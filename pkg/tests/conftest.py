"""Pytest fixtures for oscillating-grasp tests."""

from collections.abc import Iterator
from pathlib import Path

import numpy as np
import pytest
from numpy.typing import NDArray

from oscillating_grasp.config import Config, use_config
from oscillating_grasp.controllers import PreparedController, prepare
from oscillating_grasp.demos import DemoSet, synth_demos
from oscillating_grasp.mixture import (
    FrameGMM,
    GaussianComponent,
    JointGMM,
    ModelBundle,
    fit_model,
)
from oscillating_grasp.models import CostSpec, Method, Pose6, SynthSpec, SystemModel

TEST_CONFIG = Path(__file__).parent / "fixtures" / "test_config.toml"


@pytest.fixture(scope="session", autouse=True)
def _session_config() -> None:
    """Every test runs against the fixture configuration."""
    use_config(TEST_CONFIG)


@pytest.fixture(autouse=True)
def _restore_config() -> Iterator[None]:
    """Undo configuration changes made by a test."""
    yield
    use_config(TEST_CONFIG)


@pytest.fixture
def test_config_path() -> Path:
    """Path to test configuration file."""
    return TEST_CONFIG


@pytest.fixture
def config(test_config_path: Path) -> Config:
    """Load test configuration."""
    # Reset singleton for testing
    Config._instance = None
    return Config(test_config_path)


@pytest.fixture
def small_spec() -> SynthSpec:
    """Generator parameters with a short horizon."""
    return SynthSpec.from_config().model_copy(update={"horizon": 50})


@pytest.fixture(scope="session")
def demo_set() -> DemoSet:
    """The default 40-demonstration synthetic set."""
    return synth_demos(40, 7)


@pytest.fixture(scope="session")
def model(demo_set: DemoSet) -> ModelBundle:
    """Joint model fitted to the default synthetic set."""
    return fit_model(demo_set, n_components=6, seed=0)


def random_spd(rng: np.random.Generator, d: int, scale: float = 1.0) -> NDArray[np.float64]:
    """Well-conditioned random covariance."""
    M = rng.normal(size=(d, d))
    return scale * (M @ M.T + d * np.eye(d))


def frame_gmm(seed: int = 0) -> FrameGMM:
    """Two-component mixture over [time; pose] with time means 50 and 150."""
    rng = np.random.default_rng(seed)
    components = []
    for weight, t_mean in ((0.4, 50.0), (0.6, 150.0)):
        cov = random_spd(rng, 7, 0.01)
        cov[0, 0] = 900.0
        mean = np.concatenate(([t_mean], rng.normal(scale=0.1, size=6)))
        components.append(GaussianComponent(weight=weight, mean=mean, covariance=cov))
    return FrameGMM(components=components)


def duplicated_joint(gmm: FrameGMM) -> JointGMM:
    """Two-frame joint model whose frame blocks are identical copies of gmm."""
    idx = np.array([0, *range(1, 7), *range(1, 7)])
    components = [
        GaussianComponent(
            weight=c.weight, mean=c.mean[idx], covariance=c.covariance[np.ix_(idx, idx)]
        )
        for c in gmm.components
    ]
    return JointGMM(components=components, n_frames=2)


@pytest.fixture
def twin_joint() -> JointGMM:
    """Two-frame model with identical frame blocks."""
    return duplicated_joint(frame_gmm())


@pytest.fixture
def dual_controller(model: ModelBundle) -> PreparedController:
    """DualLQR at rho = 0 prepared from the fitted model."""
    return prepare(
        Method.DUAL_LQR, model.joint, CostSpec(rho=0.0), SystemModel(dt=0.05), model.horizon
    )


@pytest.fixture
def central_goal() -> Pose6:
    """Central goal pose of the benchmark."""
    return Pose6(position=(0.22, 0.27, -0.26), orientation=(0.0, 0.0, 1.46))


@pytest.fixture
def nominal_start() -> Pose6:
    """Nominal start pose."""
    return Pose6(position=(-0.25, 0.30, 0.05), orientation=(0.0, 0.0, 0.0))
