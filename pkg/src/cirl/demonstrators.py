"""The human teacher's two learning-phase policies.

The expert simply rolls out the reward-optimal plan for theta. The
instructive demonstrator instead searches for a single trajectory whose
feature counts resemble the feature counts the robot expects theta to
induce, trading demonstration reward for how sharply the demonstration
pins down theta:

    score(tau) = phi(tau) . theta - eta * ||target - phi(tau)||^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import belief as belief_mod
from . import metrics
from .config import rng_for
from .games import GridWorld, Trajectory, make_trajectory, sample_theta
from .planning import (
    greedy_rollout,
    occupancy_and_features,
    soft_value_iteration,
    value_iteration,
)

DEFAULT_BEAM_WIDTH = 128


@dataclass(frozen=True)
class DemoObjective:
    """Trajectory score for the instructive demonstrator."""

    theta: np.ndarray
    target_features: np.ndarray
    eta: float

    def __post_init__(self):
        if self.eta < 0:
            raise ValueError("eta must be nonnegative")
        if self.target_features.shape != self.theta.shape:
            raise ValueError("target_features and theta must have equal length")

    def score(self, feature_sums: np.ndarray) -> np.ndarray:
        f = np.atleast_2d(feature_sums)
        gap = self.target_features[None, :] - f
        return f @ self.theta - self.eta * (gap * gap).sum(axis=1)


def expert_demo(world: GridWorld, theta: np.ndarray) -> Trajectory:
    """Reward-optimal demonstration: what a teacher ignoring the learner does."""
    steps = world.config.learning_steps
    plan = value_iteration(world, theta, steps)
    return greedy_rollout(world, plan, world.initial_state, steps)


def target_features(world: GridWorld, theta: np.ndarray, lam: float) -> np.ndarray:
    """Feature counts the robot expects theta to induce over the learning phase."""
    steps = world.config.learning_steps
    soft = soft_value_iteration(world, theta, lam, steps)
    occ = occupancy_and_features(world, soft.soft_policy, world.initial_state, steps)
    return occ.expected_features


def instructive_demo(
    world: GridWorld, objective: DemoObjective, search_width: int | float = DEFAULT_BEAM_WIDTH
) -> Trajectory:
    """Beam search over fixed-length action sequences under the objective.

    Prefixes are ranked by the objective applied to their partial feature
    sums. A width of at least 5**learning_steps (or math.inf) makes the
    search exhaustive, in which case the result is the exact argmax. Ties
    break toward the lexicographically first action sequence.
    """
    if not (search_width == math.inf or search_width >= 1):
        raise ValueError("search_width must be >= 1")
    steps = world.config.learning_steps
    n_actions = world.succ.shape[1]
    width = int(min(search_width, n_actions**steps))

    # beam arrays, kept in (score desc, generation order) after each prune
    states = np.array([world.initial_state])
    feats = world.features.matrix[states].copy()
    action_seqs = [()]

    for _ in range(steps):
        nxt_states = world.succ[states].ravel()  # beam-major, action-minor
        nxt_feats = np.repeat(feats, n_actions, axis=0) + world.features.matrix[nxt_states]
        scores = objective.score(nxt_feats)
        # stable sort keeps generation order among exact ties
        order = np.argsort(-scores, kind="stable")[:width]
        states = nxt_states[order]
        feats = nxt_feats[order]
        action_seqs = [
            action_seqs[i // n_actions] + (i % n_actions,) for i in order
        ]

    final = objective.score(feats)
    winners = np.flatnonzero(final >= final.max() - 0.0)
    best = min(winners, key=lambda i: action_seqs[i])
    return make_trajectory(world, world.initial_state, action_seqs[best])


def episode_regret(
    world: GridWorld,
    theta_gt: np.ndarray,
    demo: Trajectory,
    lam: float,
    belief_seed: int,
) -> float:
    """Deployment regret after updating a fresh prior belief on one demo."""
    b = belief_mod.init_belief(world.config, np.random.default_rng(belief_seed))
    b = belief_mod.update(b, world, demo, lam)
    theta_hat = belief_mod.posterior_mean(b)
    return metrics.regret(world, theta_gt, theta_hat, world.config.deployment_steps)


def cross_validate_eta(
    world: GridWorld,
    candidate_etas,
    training_seeds,
    lam: float,
    search_width: int = DEFAULT_BEAM_WIDTH,
) -> float:
    """Pick the feature-matching weight by mean regret on held-out draws.

    Each training seed fixes a (theta, belief) pair; every candidate is
    scored on the same pairs. Ties go to the smallest candidate.
    """
    candidates = sorted(float(e) for e in candidate_etas)
    if not candidates:
        raise ValueError("candidate eta list is empty")
    training_seeds = list(training_seeds)
    if not training_seeds:
        raise ValueError("training seed list is empty")

    draws = []
    for seed in training_seeds:
        theta = sample_theta(world.config, rng_for(seed, "cv-theta"))
        draws.append((theta, target_features(world, theta, lam), seed))

    best_eta, best_regret = None, np.inf
    for eta in candidates:
        total = 0.0
        for theta, target, seed in draws:
            demo = instructive_demo(
                world, DemoObjective(theta=theta, target_features=target, eta=eta), search_width
            )
            total += episode_regret(world, theta, demo, lam, seed)
        mean_regret = total / len(draws)
        if mean_regret < best_regret:  # strict: exact ties keep the smaller eta
            best_eta, best_regret = eta, mean_regret
    return best_eta
