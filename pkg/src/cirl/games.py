"""Game structure: grid navigation world, RBF features, trajectories, and
the two-round paperclip/staple game.

States are grid cells flattened row-major (s = row * grid_size + col).
Rewards are linear in state features: r(s) = phi(s) . theta, with theta
drawn from a uniform prior on [-1, 1]^num_features.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import GameConfig, rng_for

# Action order is the argmax tie-break order everywhere.
ACTION_NAMES = ("N", "S", "E", "W", "noop")
ACTION_DELTAS = ((-1, 0), (1, 0), (0, 1), (0, -1), (0, 0))
NUM_ACTIONS = len(ACTION_NAMES)


@dataclass(frozen=True)
class FeatureMap:
    """Radial basis features evaluated on every grid cell.

    ``matrix[s, k] = exp(-d(s, center_k)^2 / (2 * bandwidth^2))``, so every
    entry is in (0, 1] and column k peaks exactly at center k.
    """

    centers: np.ndarray  # (num_features, 2) int cell coordinates
    bandwidth: float
    matrix: np.ndarray  # (num_states, num_features)

    @classmethod
    def build(cls, grid_size: int, centers: np.ndarray, bandwidth: float) -> "FeatureMap":
        centers = np.asarray(centers, dtype=int)
        if bandwidth <= 0:
            raise ValueError("bandwidth must be positive")
        rows, cols = np.divmod(np.arange(grid_size * grid_size), grid_size)
        cells = np.stack([rows, cols], axis=1)
        d2 = ((cells[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        matrix = np.exp(-d2 / (2.0 * bandwidth**2))
        matrix.setflags(write=False)
        centers.setflags(write=False)
        return cls(centers=centers, bandwidth=float(bandwidth), matrix=matrix)

    @classmethod
    def sample(cls, config: GameConfig) -> "FeatureMap":
        # Centers are common knowledge: drawn once from the config seed,
        # uniformly without replacement over the cells.
        rng = rng_for(config.seed, "centers")
        flat = rng.choice(config.grid_size**2, size=config.num_features, replace=False)
        centers = np.stack(np.divmod(flat, config.grid_size), axis=1)
        return cls.build(config.grid_size, centers, config.rbf_bandwidth)

    @property
    def num_features(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class GridWorld:
    """Deterministic grid navigation game with turn-based teaching.

    Moves off the edge leave the state unchanged. The start state is the
    center cell. ``succ[s, a]`` is the successor table shared by every
    planner in this package.
    """

    config: GameConfig
    features: FeatureMap
    succ: np.ndarray  # (num_states, NUM_ACTIONS) int
    initial_state: int

    @classmethod
    def from_config(cls, config: GameConfig, features: FeatureMap | None = None) -> "GridWorld":
        g = config.grid_size
        if features is None:
            features = FeatureMap.sample(config)
        if features.num_features != config.num_features:
            raise ValueError("feature map width does not match num_features")
        states = np.arange(g * g)
        rows, cols = np.divmod(states, g)
        succ = np.empty((g * g, NUM_ACTIONS), dtype=np.int64)
        for a, (dr, dc) in enumerate(ACTION_DELTAS):
            nr = np.clip(rows + dr, 0, g - 1)
            nc = np.clip(cols + dc, 0, g - 1)
            succ[:, a] = nr * g + nc
        succ.setflags(write=False)
        center = (g // 2) * g + (g // 2)
        return cls(config=config, features=features, succ=succ, initial_state=int(center))

    @property
    def num_states(self) -> int:
        return self.succ.shape[0]

    @property
    def num_features(self) -> int:
        return self.features.num_features

    def state_index(self, row: int, col: int) -> int:
        g = self.config.grid_size
        if not (0 <= row < g and 0 <= col < g):
            raise ValueError(f"cell ({row}, {col}) outside {g}x{g} grid")
        return row * g + col

    def state_coords(self, state: int) -> tuple[int, int]:
        self._check_state(state)
        r, c = divmod(int(state), self.config.grid_size)
        return r, c

    def step(self, state: int, action: int) -> int:
        self._check_state(state)
        if not (0 <= action < NUM_ACTIONS):
            raise ValueError(f"invalid action index {action}")
        return int(self.succ[state, action])

    def _check_state(self, state: int) -> None:
        if not (0 <= int(state) < self.num_states):
            raise ValueError(f"state {state} out of range for {self.num_states} cells")

    # Keyed by construction inputs, not object identity, so caches survive
    # rebuilding an identical world.
    @property
    def cache_key(self) -> tuple:
        return (
            self.config.grid_size,
            self.features.bandwidth,
            self.features.centers.tobytes(),
        )


@dataclass(frozen=True)
class Trajectory:
    """Alternating state/action record with its accumulated feature counts.

    ``feature_sum`` counts the features of every visited state, the start
    included and repeat visits counted each time.
    """

    states: tuple[int, ...]
    actions: tuple[int, ...]
    feature_sum: np.ndarray

    def __len__(self) -> int:
        return len(self.actions)


def make_trajectory(world: GridWorld, start: int, actions) -> Trajectory:
    """Roll actions forward from start and accumulate features."""
    actions = tuple(int(a) for a in actions)
    states = [int(start)]
    for a in actions:
        states.append(world.step(states[-1], a))
    feats = world.features.matrix[np.array(states, dtype=int)].sum(axis=0)
    feats.setflags(write=False)
    return Trajectory(states=tuple(states), actions=actions, feature_sum=feats)


def validate_trajectory(world: GridWorld, tau: Trajectory) -> None:
    """Raise if tau is inconsistent with the world's transition function."""
    if len(tau.states) != len(tau.actions) + 1:
        raise ValueError("trajectory must have one more state than actions")
    for s, a, s_next in zip(tau.states, tau.actions, tau.states[1:]):
        if world.step(s, a) != s_next:
            raise ValueError(
                f"transition {s} --{ACTION_NAMES[a]}--> {s_next} contradicts the world"
            )


def feature_vector(world: GridWorld, state: int) -> np.ndarray:
    world._check_state(state)
    return world.features.matrix[int(state)]


def reward(world: GridWorld, state: int, theta: np.ndarray) -> float:
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (world.num_features,):
        raise ValueError(
            f"theta has shape {theta.shape}, expected ({world.num_features},)"
        )
    return float(feature_vector(world, state) @ theta)


def state_rewards(world: GridWorld, theta: np.ndarray) -> np.ndarray:
    """Reward of every state under theta (the heatmap vector)."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != (world.num_features,):
        raise ValueError(
            f"theta has shape {theta.shape}, expected ({world.num_features},)"
        )
    return world.features.matrix @ theta


def trajectory_features(tau: Trajectory) -> np.ndarray:
    if not tau.states:
        raise ValueError("empty trajectory")
    return tau.feature_sum


def sample_theta(config: GameConfig, rng: np.random.Generator) -> np.ndarray:
    """One reward-weight draw from the uniform prior on [-1, 1]^num_features."""
    return rng.uniform(-1.0, 1.0, size=config.num_features)


# ---------------------------------------------------------------------------
# Two-round paperclip/staple game


class PaperclipGame:
    """Turn-based make-office-supplies game: the human produces items at t=0,
    the robot at t=1, then the game sinks. An action (p, q) makes p paperclips
    and q staples and is worth theta * p + (1 - theta) * q, theta in [0, 1].
    """

    HUMAN_ACTIONS = ((0, 2), (1, 1), (2, 0))
    ROBOT_ACTIONS = ((0, 90), (50, 50), (90, 0))

    @staticmethod
    def action_reward(action: tuple[int, int], theta) -> np.ndarray | float:
        p, q = action
        theta = np.asarray(theta, dtype=float)
        value = theta * p + (1.0 - theta) * q
        return float(value) if value.ndim == 0 else value
