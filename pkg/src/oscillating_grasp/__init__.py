"""Oscillating Grasp.

Task-parameterized learning-from-demonstration controllers (InfLQR, SingleLQR,
DualLQR) for grasping oscillating targets, with a kinematic benchmark harness.
"""

__version__ = "0.1.0"

from oscillating_grasp.bench import default_plan, report, select_best, sweep
from oscillating_grasp.config import get_config
from oscillating_grasp.controllers import PreparedController, StepContext, prepare, step
from oscillating_grasp.demos import DemoSet, Demonstration, load_set, save_set, synth_demos
from oscillating_grasp.metrics import EpisodeMetrics, evaluate
from oscillating_grasp.mixture import ModelBundle, fit_model, load_model, save_model
from oscillating_grasp.models import (
    AmplitudeLevel,
    Axis,
    CostSpec,
    Method,
    OscillationSpec,
    Pose6,
    ResultRow,
    SweepPlan,
    SystemModel,
)
from oscillating_grasp.sim import EpisodeConfig, EpisodeLog, run_episode

__all__ = [
    "AmplitudeLevel",
    "Axis",
    "CostSpec",
    "default_plan",
    "DemoSet",
    "Demonstration",
    "EpisodeConfig",
    "EpisodeLog",
    "EpisodeMetrics",
    "evaluate",
    "fit_model",
    "get_config",
    "load_model",
    "load_set",
    "Method",
    "ModelBundle",
    "OscillationSpec",
    "Pose6",
    "prepare",
    "PreparedController",
    "report",
    "ResultRow",
    "run_episode",
    "save_model",
    "save_set",
    "select_best",
    "StepContext",
    "step",
    "SweepPlan",
    "synth_demos",
    "SystemModel",
]
