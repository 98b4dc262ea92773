"""Tests for configuration loader."""

from pathlib import Path

import pytest

from oscillating_grasp.config import Config, get_config, use_config


def test_config_loads_successfully(test_config_path: Path) -> None:
    """Test that configuration loads from TOML file."""
    Config._instance = None
    config = Config(test_config_path)

    assert config is not None
    assert config.horizon == 200


def test_config_missing_file() -> None:
    """Test error handling for missing config file."""
    Config._instance = None
    with pytest.raises(FileNotFoundError):
        Config(Path("/nonexistent/path/config.toml"))


def test_config_singleton_pattern(test_config_path: Path) -> None:
    """Test that Config follows singleton pattern."""
    Config._instance = None
    config1 = Config(test_config_path)
    config2 = Config()

    assert config1 is config2


def test_get_config_function(test_config_path: Path) -> None:
    """Test get_config() function."""
    Config._instance = None
    config = get_config(test_config_path)

    assert isinstance(config, Config)


def test_use_config_replaces_instance(test_config_path: Path) -> None:
    """use_config discards the previous singleton."""
    before = get_config()
    after = use_config(test_config_path)

    assert after is not before
    assert get_config() is after


def test_reload_rereads_file(config: Config, tmp_path: Path, test_config_path: Path) -> None:
    """reload() switches to another file in place."""
    changed = tmp_path / "changed.toml"
    changed.write_text(test_config_path.read_text().replace("horizon = 200", "horizon = 120"))
    config.reload(changed)

    assert config.horizon == 120


def test_simulation_properties(config: Config) -> None:
    """Test [simulation] values."""
    assert config.dt == 0.05
    assert config.oscillation_frequency == 0.5
    assert config.latency_ms == 45.0
    assert config.start_pose == (-0.25, 0.30, 0.05, 0.0, 0.0, 0.0)
    assert config.goal_pose == (0.22, 0.27, -0.26, 0.0, 0.0, 1.46)


def test_model_properties(config: Config) -> None:
    """Test [model] values."""
    assert config.n_components == 6
    assert config.covariance_floor == 1e-6
    assert config.em_tolerance == 1e-6
    assert config.em_max_iterations == 200


def test_synthetic_properties(config: Config) -> None:
    """Test [synthetic] values."""
    assert config.n_demos == 40
    assert config.goal_variation == (0.1, 0.2, 0.05, 0.2, 0.0, 0.2)
    assert config.start_jitter == (0.02, 0.02, 0.02, 0.01, 0.01, 0.01)
    assert config.terminal_push == 0.003
    assert config.terminal_sigma_depth == 0.08
    assert config.pitch_roll_coupling == 0.5
    assert config.approach_tangent_scale == 2.0


def test_evaluation_properties(config: Config) -> None:
    """Test [evaluation] values."""
    assert config.accuracy_limits == (0.03, 0.10, 0.07, 0.07, 0.07)
    assert config.approach_distance == 0.05
    assert config.required_accuracy == 0.88
    assert config.misalignment_tolerance == 0.01


def test_rho_grid(config: Config) -> None:
    """Control costs run from -3.0 to 3.0 in steps of 0.3."""
    grid = config.rho_grid

    assert len(grid) == 21
    assert grid[0] == -3.0
    assert grid[-1] == 3.0
    assert 0.0 in grid
    assert 2.7 in grid


def test_sweep_properties(config: Config) -> None:
    """Test [sweep] values."""
    assert config.position_amplitudes == (0.05, 0.10, 0.15)
    assert config.orientation_amplitudes == (0.15, 0.30, 0.45)
    assert len(config.goal_variants) == 10
    assert config.goal_variants[0] == (0, 0.1)
    assert config.selection_conditions == {
        "InfLQR": "high/position",
        "SingleLQR": "medium/orientation",
        "DualLQR": "high/orientation",
    }
    assert config.apple_decay == 0.4
