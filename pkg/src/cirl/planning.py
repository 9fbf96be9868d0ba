"""Finite-horizon planning: exact Bellman backups, maximum-entropy soft
value iteration, and occupancy / expected-feature propagation.

Conventions shared by every routine here:
  * reward accrues on the occupied state each step, final state included,
    so a plan over T actions scores T+1 states and the trajectory feature
    sum is the exact sufficient statistic of trajectory reward;
  * argmax ties break by the fixed action order N, S, E, W, noop.

The soft planner induces the trajectory distribution
P(tau) = exp(lambda * theta . phi(tau) - log_partition), which is what the
robot assumes the demonstrator samples from.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import GridWorld, Trajectory, make_trajectory

_LOG_PARTITION_CACHE: dict[tuple, float] = {}


@dataclass(frozen=True)
class Plan:
    """Bellman-optimal finite-horizon plan.

    values has steps+1 time layers (the last is the terminal reward layer);
    q_values and greedy_policy have one layer per decision step.
    """

    q_values: np.ndarray  # (steps, S, A)
    greedy_policy: np.ndarray  # (steps, S) int
    values: np.ndarray  # (steps + 1, S)


@dataclass(frozen=True)
class SoftPlan:
    """Soft (log-sum-exp) finite-horizon plan at rationality lambda.

    log_partition is the log of the sum of exp(lambda * theta . phi(tau))
    over all fixed-length trajectories from the world's initial state.
    """

    soft_policy: np.ndarray  # (steps, S, A), rows normalized
    soft_values: np.ndarray  # (steps + 1, S)
    log_partition: float

    def log_policy(self, t: int) -> np.ndarray:
        # Recomputed from values rather than log(prob) for stability.
        cont = self.soft_values[t + 1][self._succ]
        return cont - _logsumexp(cont, axis=1)[:, None]

    # set by soft_value_iteration; the successor table is needed to recover
    # log-probabilities exactly
    _succ: np.ndarray = None


@dataclass(frozen=True)
class Occupancy:
    """Per-timestep state distribution plus the implied feature expectation."""

    visitation: np.ndarray  # (steps + 1, S)
    expected_features: np.ndarray  # (num_features,)


def _logsumexp(x: np.ndarray, axis: int) -> np.ndarray:
    m = x.max(axis=axis)
    return m + np.log(np.exp(x - np.expand_dims(m, axis)).sum(axis=axis))


def value_iteration(world: GridWorld, theta: np.ndarray, steps: int) -> Plan:
    """Exact backward induction for the reward phi(s) . theta."""
    if steps < 1:
        raise ValueError("steps must be >= 1")
    theta = np.asarray(theta, dtype=float)
    r = world.features.matrix @ theta
    gamma = world.config.gamma
    n_states, n_actions = world.succ.shape

    values = np.empty((steps + 1, n_states))
    q_values = np.empty((steps, n_states, n_actions))
    greedy = np.empty((steps, n_states), dtype=np.int64)
    values[steps] = r
    for t in range(steps - 1, -1, -1):
        q = r[:, None] + gamma * values[t + 1][world.succ]
        q_values[t] = q
        greedy[t] = np.argmax(q, axis=1)  # first max wins: N,S,E,W,noop order
        values[t] = q[np.arange(n_states), greedy[t]]
    return Plan(q_values=q_values, greedy_policy=greedy, values=values)


def soft_value_iteration(
    world: GridWorld, theta: np.ndarray, lam: float, steps: int
) -> SoftPlan:
    """Maximum-entropy backward pass: max is replaced by log-sum-exp.

    soft_values[t][s] = lam * r(s) + lse_a soft_values[t+1][succ(s, a)],
    with terminal layer lam * r(s). The policy weights each action by the
    exponentiated soft value of its successor.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    theta = np.asarray(theta, dtype=float)
    lr = lam * (world.features.matrix @ theta)
    n_states, n_actions = world.succ.shape

    soft_values = np.empty((steps + 1, n_states))
    soft_policy = np.empty((steps, n_states, n_actions))
    soft_values[steps] = lr
    for t in range(steps - 1, -1, -1):
        cont = soft_values[t + 1][world.succ]
        lse = _logsumexp(cont, axis=1)
        soft_values[t] = lr + lse
        soft_policy[t] = np.exp(cont - lse[:, None])
    return SoftPlan(
        soft_policy=soft_policy,
        soft_values=soft_values,
        log_partition=float(soft_values[0, world.initial_state]),
        _succ=world.succ,
    )


def log_partition_layers(
    world: GridWorld, thetas: np.ndarray, lam: float, steps: int
) -> np.ndarray:
    """log-partition at the initial state for every horizon 0..steps and
    every theta row, in one batched backward pass.

    Returns (steps + 1, M); row t is the log normalizer over length-t
    trajectories. Row ``steps`` matches SoftPlan.log_partition.
    """
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    lr = lam * (world.features.matrix @ thetas.T)  # (S, M)
    out = np.empty((steps + 1, thetas.shape[0]))
    v = lr.copy()
    out[0] = v[world.initial_state]
    for t in range(1, steps + 1):
        cont = v[world.succ]  # (S, A, M)
        m = cont.max(axis=1)
        v = lr + m + np.log(np.exp(cont - m[:, None, :]).sum(axis=1))
        out[t] = v[world.initial_state]
    return out


def log_partition(world: GridWorld, theta: np.ndarray, lam: float, steps: int) -> float:
    """Cached scalar log-partition for one theta.

    The cache is what makes re-scoring the same belief particles cheap when
    eta cross-validation replays the pipeline with identical seeds.
    """
    theta = np.asarray(theta, dtype=float)
    key = (world.cache_key, theta.tobytes(), float(lam), int(steps))
    hit = _LOG_PARTITION_CACHE.get(key)
    if hit is None:
        hit = float(log_partition_layers(world, theta[None, :], lam, steps)[steps, 0])
        _LOG_PARTITION_CACHE[key] = hit
    return hit


def log_partition_batch(
    world: GridWorld, thetas: np.ndarray, lam: float, steps: int
) -> np.ndarray:
    """Vectorized log-partition over particle rows, filling the scalar cache."""
    thetas = np.atleast_2d(np.asarray(thetas, dtype=float))
    keys = [
        (world.cache_key, thetas[i].tobytes(), float(lam), int(steps))
        for i in range(thetas.shape[0])
    ]
    out = np.empty(thetas.shape[0])
    missing = [i for i, k in enumerate(keys) if k not in _LOG_PARTITION_CACHE]
    for i in set(range(thetas.shape[0])) - set(missing):
        out[i] = _LOG_PARTITION_CACHE[keys[i]]
    if missing:
        fresh = log_partition_layers(world, thetas[missing], lam, steps)[steps]
        for j, i in enumerate(missing):
            out[i] = fresh[j]
            _LOG_PARTITION_CACHE[keys[i]] = float(fresh[j])
    return out


def occupancy_and_features(
    world: GridWorld, policy: np.ndarray, start_state: int, steps: int
) -> Occupancy:
    """Push the start distribution forward through a per-timestep policy.

    policy is (steps, S, A) with normalized rows; the expected features sum
    the state feature vector over all steps+1 visited layers.
    """
    policy = np.asarray(policy, dtype=float)
    if policy.shape != (steps, world.num_states, world.succ.shape[1]):
        raise ValueError(f"policy shape {policy.shape} does not match (steps, S, A)")
    if not np.allclose(policy.sum(axis=2), 1.0, atol=1e-9):
        raise ValueError("policy rows must sum to 1")

    n_states = world.num_states
    visitation = np.zeros((steps + 1, n_states))
    visitation[0, start_state] = 1.0
    flat_succ = world.succ.ravel()
    for t in range(steps):
        flow = (visitation[t][:, None] * policy[t]).ravel()
        visitation[t + 1] = np.bincount(flat_succ, weights=flow, minlength=n_states)
    expected = visitation.sum(axis=0) @ world.features.matrix
    return Occupancy(visitation=visitation, expected_features=expected)


def greedy_rollout(world: GridWorld, plan: Plan, start: int, steps: int) -> Trajectory:
    """Follow a plan's greedy policy for the given number of steps."""
    if steps > plan.greedy_policy.shape[0]:
        raise ValueError("rollout longer than the plan horizon")
    s, actions = int(start), []
    for t in range(steps):
        a = int(plan.greedy_policy[t, s])
        actions.append(a)
        s = world.step(s, a)
    return make_trajectory(world, start, actions)


def evaluate_policy(
    world: GridWorld, policy: np.ndarray, theta: np.ndarray, steps: int
) -> np.ndarray:
    """Value of a deterministic per-timestep policy under theta, all starts.

    policy is (steps, S) int; returns the time-0 value vector.
    """
    theta = np.asarray(theta, dtype=float)
    r = world.features.matrix @ theta
    gamma = world.config.gamma
    states = np.arange(world.num_states)
    v = r.copy()
    for t in range(steps - 1, -1, -1):
        v = r + gamma * v[world.succ[states, policy[t]]]
    return v


def clear_plan_cache() -> None:
    _LOG_PARTITION_CACHE.clear()
