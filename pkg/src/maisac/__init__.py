"""Joint beamforming and movable-antenna placement for integrated sensing and communication."""

from .metrics import MetricsReport, objective
from .model import InvalidConfigError, Scene, SystemConfig, paper_config, sample_scene
from .solver import Scheme, SolveResult, solve

__all__ = ["InvalidConfigError", "MetricsReport", "Scene", "Scheme", "SolveResult",
           "SystemConfig", "objective", "paper_config", "sample_scene", "solve"]
