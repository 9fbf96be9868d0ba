"""Deployment quality measures: regret, trajectory-distribution divergence,
and reward-vector distance between the inferred and true weights.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import GridWorld
from .planning import (
    evaluate_policy,
    occupancy_and_features,
    soft_value_iteration,
    value_iteration,
)


@dataclass(frozen=True)
class EvalResult:
    regret: float
    kl: float
    reward_l2: float
    theta_gt: np.ndarray
    theta_hat: np.ndarray


def regret(
    world: GridWorld, theta_gt: np.ndarray, theta_hat: np.ndarray, deployment_steps: int
) -> float:
    """Value lost by deploying the plan for theta_hat instead of theta_gt.

    The deployment start is uniform over all cells, so the expectation is
    the exact mean of per-start value gaps, not a sampled one.
    """
    optimal = value_iteration(world, theta_gt, deployment_steps)
    plan_hat = value_iteration(world, theta_hat, deployment_steps)
    achieved = evaluate_policy(world, plan_hat.greedy_policy, theta_gt, deployment_steps)
    gaps = optimal.values[0] - achieved
    return float(gaps.mean())


def kl_divergence(
    world: GridWorld, theta_hat: np.ndarray, theta_gt: np.ndarray, lam: float, steps: int
) -> float:
    """KL(P_hat || P_gt) between soft trajectory distributions, chain-rule form.

    Sums, over timesteps and the states the hat-policy actually occupies
    from the initial state, the per-state KL between the two soft policies.
    Exact for any horizon; finite for finite lambda because soft policies
    have full support.
    """
    soft_hat = soft_value_iteration(world, theta_hat, lam, steps)
    soft_gt = soft_value_iteration(world, theta_gt, lam, steps)
    occ = occupancy_and_features(world, soft_hat.soft_policy, world.initial_state, steps)
    total = 0.0
    for t in range(steps):
        per_state = (
            soft_hat.soft_policy[t] * (soft_hat.log_policy(t) - soft_gt.log_policy(t))
        ).sum(axis=1)
        total += float(occ.visitation[t] @ per_state)
    return max(total, 0.0)


def reward_l2(world: GridWorld, theta_hat: np.ndarray, theta_gt: np.ndarray) -> float:
    """l2 distance between the per-state reward vectors of the two weights."""
    diff = np.asarray(theta_hat, dtype=float) - np.asarray(theta_gt, dtype=float)
    if diff.shape != (world.features.matrix.shape[1],):
        raise ValueError("theta length does not match the feature matrix")
    return float(np.linalg.norm(world.features.matrix @ diff))


def evaluate(
    world: GridWorld,
    theta_gt: np.ndarray,
    theta_hat: np.ndarray,
    lam: float,
) -> EvalResult:
    """All three measures with the package's standard horizons."""
    cfg = world.config
    return EvalResult(
        regret=regret(world, theta_gt, theta_hat, cfg.deployment_steps),
        kl=kl_divergence(world, theta_hat, theta_gt, lam, cfg.learning_steps),
        reward_l2=reward_l2(world, theta_hat, theta_gt),
        theta_gt=np.asarray(theta_gt, dtype=float),
        theta_hat=np.asarray(theta_hat, dtype=float),
    )
