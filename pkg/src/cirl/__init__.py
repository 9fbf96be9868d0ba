"""Cooperative reward-learning games at desk scale: planning, inference,
teaching policies, equilibria, experiments, and a live teaching service."""

from .config import GameConfig, child_seed, load_config, rng_for
from .games import FeatureMap, GridWorld, PaperclipGame, Trajectory, make_trajectory

__version__ = "0.1.0"

__all__ = [
    "GameConfig",
    "FeatureMap",
    "GridWorld",
    "PaperclipGame",
    "Trajectory",
    "child_seed",
    "load_config",
    "make_trajectory",
    "rng_for",
    "__version__",
]
