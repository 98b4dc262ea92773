"""Configuration loader for controller, simulation and benchmark defaults."""

import sys

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib
from pathlib import Path
from typing import Any


class Config:
    """Singleton configuration loader for system-wide defaults."""

    _instance: "Config | None" = None
    _config_data: dict[str, Any]
    _config_path: Path

    def __new__(cls, config_path: Path | None = None) -> "Config":
        """Ensure singleton pattern."""
        if cls._instance is None:
            cls._instance = super().__new__(cls)
            cls._instance._load_config(config_path)
        return cls._instance

    def _load_config(self, config_path: Path | None = None) -> None:
        """Load configuration from TOML file."""
        if config_path is None:
            # Default to defaults.toml in project root
            config_path = Path(__file__).parent.parent.parent / "defaults.toml"

        self._config_path = config_path

        if not self._config_path.exists():
            raise FileNotFoundError(f"Config file not found: {self._config_path}")

        with open(self._config_path, "rb") as f:
            self._config_data = tomllib.load(f)

    def reload(self, config_path: Path | None = None) -> None:
        """Reload configuration from file."""
        self._load_config(config_path)

    def _section(self, name: str) -> dict[str, Any]:
        section: dict[str, Any] = self._config_data[name]
        return section

    # [simulation]

    @property
    def horizon(self) -> int:
        """Resampled timesteps per demonstration and per episode."""
        return int(self._section("simulation")["horizon"])

    @property
    def dt(self) -> float:
        """Control period in seconds."""
        return float(self._section("simulation")["dt"])

    @property
    def oscillation_frequency(self) -> float:
        """Default target oscillation frequency (Hz)."""
        return float(self._section("simulation")["oscillation_frequency"])

    @property
    def latency_ms(self) -> float:
        """Sensing latency applied when latency emulation is switched on."""
        return float(self._section("simulation")["latency_ms"])

    @property
    def start_pose(self) -> tuple[float, ...]:
        """Nominal start pose [x, y, z, roll, pitch, yaw]."""
        return tuple(float(v) for v in self._section("simulation")["start_pose"])

    @property
    def goal_pose(self) -> tuple[float, ...]:
        """Central goal pose [x, y, z, roll, pitch, yaw]."""
        return tuple(float(v) for v in self._section("simulation")["goal_pose"])

    # [model]

    @property
    def n_components(self) -> int:
        """Number of Gaussian components."""
        return int(self._section("model")["n_components"])

    @property
    def covariance_floor(self) -> float:
        """Diagonal regularization added to every covariance."""
        return float(self._section("model")["covariance_floor"])

    @property
    def em_tolerance(self) -> float:
        """Log-likelihood improvement below which EM stops."""
        return float(self._section("model")["em_tolerance"])

    @property
    def em_max_iterations(self) -> int:
        """EM iteration cap."""
        return int(self._section("model")["em_max_iterations"])

    @property
    def fit_seed(self) -> int:
        """Default EM seed."""
        return int(self._section("model")["fit_seed"])

    # [synthetic]

    @property
    def n_demos(self) -> int:
        """Default number of synthetic demonstrations."""
        return int(self._section("synthetic")["n_demos"])

    @property
    def synth_seed(self) -> int:
        """Default generator seed."""
        return int(self._section("synthetic")["seed"])

    @property
    def start_jitter(self) -> tuple[float, ...]:
        """Per-dimension standard deviation of the start frame."""
        return tuple(float(v) for v in self._section("synthetic")["start_jitter"])

    @property
    def goal_variation(self) -> tuple[float, ...]:
        """Per-dimension half-width of the uniform goal variation."""
        return tuple(float(v) for v in self._section("synthetic")["goal_variation"])

    @property
    def terminal_sigma_position(self) -> float:
        """Terminal end-frame noise on position (m)."""
        return float(self._section("synthetic")["terminal_sigma_position"])

    @property
    def terminal_sigma_orientation(self) -> float:
        """Terminal end-frame noise on orientation (rad)."""
        return float(self._section("synthetic")["terminal_sigma_orientation"])

    @property
    def noise_amplitude_position(self) -> float:
        """Mid-trajectory noise amplitude on position (m)."""
        return float(self._section("synthetic")["noise_amplitude_position"])

    @property
    def noise_amplitude_orientation(self) -> float:
        """Mid-trajectory noise amplitude on orientation (rad)."""
        return float(self._section("synthetic")["noise_amplitude_orientation"])

    @property
    def approach_tangent_scale(self) -> float:
        """Length of the final approach tangent relative to the start-goal chord."""
        return float(self._section("synthetic")["approach_tangent_scale"])

    @property
    def terminal_push(self) -> float:
        """Distance past the goal origin at which demonstrations end (m)."""
        return float(self._section("synthetic")["terminal_push"])

    @property
    def terminal_sigma_depth(self) -> float:
        """Spread of the demonstrations' stopping depth (m)."""
        return float(self._section("synthetic")["terminal_sigma_depth"])

    @property
    def pitch_roll_coupling(self) -> float:
        """Goal pitch change per radian of goal roll change."""
        return float(self._section("synthetic")["pitch_roll_coupling"])

    # [evaluation]

    @property
    def accuracy_limits(self) -> tuple[float, ...]:
        """Final approach limits (x, z, roll, pitch, yaw)."""
        return tuple(float(v) for v in self._section("evaluation")["accuracy_limits"])

    @property
    def approach_distance(self) -> float:
        """End-frame Y below which a tick belongs to the final approach."""
        return float(self._section("evaluation")["approach_distance"])

    @property
    def required_accuracy(self) -> float:
        """Final approach accuracy required of a control cost."""
        return float(self._section("evaluation")["required_accuracy"])

    @property
    def misalignment_tolerance(self) -> float:
        """Radius of the grasp tolerance sphere (m)."""
        return float(self._section("evaluation")["misalignment_tolerance"])

    # [sweep]

    @property
    def rho_grid(self) -> tuple[float, ...]:
        """Control cost exponents from rho_start to rho_stop inclusive."""
        sweep = self._section("sweep")
        start, stop, step = float(sweep["rho_start"]), float(sweep["rho_stop"]), float(
            sweep["rho_step"]
        )
        count = int(round((stop - start) / step)) + 1
        return tuple(round(start + i * step, 10) for i in range(count))

    @property
    def position_amplitudes(self) -> tuple[float, ...]:
        """Low, medium and high position amplitudes (m)."""
        return tuple(float(v) for v in self._section("sweep")["position_amplitudes"])

    @property
    def orientation_amplitudes(self) -> tuple[float, ...]:
        """Low, medium and high orientation amplitudes (rad)."""
        return tuple(float(v) for v in self._section("sweep")["orientation_amplitudes"])

    @property
    def goal_variants(self) -> list[tuple[int, float]]:
        """Single-dimension goal variants as [(dimension, offset), ...]."""
        variants = self._section("sweep")["goal_variants"]
        return [(int(v[0]), float(v[1])) for v in variants]

    @property
    def selection_conditions(self) -> dict[str, str]:
        """Per-method oscillation condition used to select the best control cost."""
        return {str(k): str(v) for k, v in self._section("sweep")["selection_conditions"].items()}

    @property
    def apple_decay(self) -> float:
        """Decay rate of the pendulum-style target (1/s)."""
        return float(self._section("sweep")["apple_decay"])


def get_config(config_path: Path | None = None) -> Config:
    """Get the singleton configuration instance.

    Args:
        config_path: Optional path to configuration file. If None, uses defaults.toml.

    Returns:
        Config instance.
    """
    return Config(config_path)


def use_config(config_path: Path) -> Config:
    """Replace the singleton with one loaded from config_path."""
    Config._instance = None
    return Config(config_path)
