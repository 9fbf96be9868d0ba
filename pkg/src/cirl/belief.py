"""The robot's posterior over reward weights, as importance-weighted prior
samples scored by the soft-planner demonstration likelihood.

A demonstration tau observed at rationality lambda multiplies each particle's
weight by exp(lambda * theta . phi(tau) - log_partition(theta)), i.e. the
probability the soft planner for that theta assigns to tau. The particle set
itself never changes, so the update is exact Bayes on the sampled support.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import GameConfig
from .games import GridWorld, Trajectory, validate_trajectory
from .planning import log_partition_batch


@dataclass(frozen=True)
class Belief:
    particles: np.ndarray  # (M, num_features)
    log_weights: np.ndarray  # (M,), normalized: logsumexp == 0
    normalized: bool = True

    @property
    def num_particles(self) -> int:
        return self.particles.shape[0]

    @property
    def weights(self) -> np.ndarray:
        return np.exp(self.log_weights)


def _normalize(log_weights: np.ndarray) -> np.ndarray:
    m = log_weights.max()
    return log_weights - (m + np.log(np.exp(log_weights - m).sum()))


def init_belief(config: GameConfig, rng: np.random.Generator) -> Belief:
    """M i.i.d. prior draws with uniform weights."""
    m = config.belief_samples
    particles = rng.uniform(-1.0, 1.0, size=(m, config.num_features))
    particles.setflags(write=False)
    log_weights = np.full(m, -np.log(m))
    log_weights.setflags(write=False)
    return Belief(particles=particles, log_weights=log_weights)


def update(belief: Belief, world: GridWorld, tau_obs: Trajectory, lam: float) -> Belief:
    """Condition on one observed demonstration of length learning_steps."""
    validate_trajectory(world, tau_obs)
    if tau_obs.states[0] != world.initial_state:
        raise ValueError("observed trajectory must start at the initial state")
    if len(tau_obs) != world.config.learning_steps:
        raise ValueError(
            f"observed trajectory has {len(tau_obs)} steps, "
            f"expected {world.config.learning_steps}"
        )
    log_z = log_partition_batch(world, belief.particles, lam, len(tau_obs))
    log_lik = lam * (belief.particles @ tau_obs.feature_sum) - log_z
    log_weights = _normalize(belief.log_weights + log_lik)
    log_weights.setflags(write=False)
    return Belief(particles=belief.particles, log_weights=log_weights)


def posterior_mean(belief: Belief) -> np.ndarray:
    return belief.weights @ belief.particles


def map_estimate(belief: Belief) -> np.ndarray:
    """Highest-weight particle; ties go to the lowest particle index."""
    return belief.particles[int(np.argmax(belief.log_weights))]


def map_index(belief: Belief) -> int:
    return int(np.argmax(belief.log_weights))


def to_document(belief: Belief) -> dict:
    """JSON-ready snapshot consumed by the service and the results store."""
    return {
        "particles": belief.particles.tolist(),
        "weights": belief.weights.tolist(),
        "posterior_mean": posterior_mean(belief).tolist(),
        "map_index": map_index(belief),
    }


def from_document(doc: dict) -> Belief:
    particles = np.asarray(doc["particles"], dtype=float)
    weights = np.asarray(doc["weights"], dtype=float)
    log_weights = _normalize(np.log(weights))
    particles.setflags(write=False)
    log_weights.setflags(write=False)
    return Belief(particles=particles, log_weights=log_weights)
