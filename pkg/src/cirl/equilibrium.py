"""Equilibrium analysis of the two-round paperclip/staple game on a
discretized preference grid: mutual best responses, their fixpoint, and a
globally optimal threshold policy pair.

Because the action reward is affine in theta, the robot's expected reward
under any belief equals its reward at the belief mean, so best-responding
to a message reduces to planning at the conditional mean (ties go to the
first-listed action).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .games import PaperclipGame

H_ACTIONS = PaperclipGame.HUMAN_ACTIONS
R_ACTIONS = PaperclipGame.ROBOT_ACTIONS
PRIOR_MEAN = 0.5


@dataclass(frozen=True)
class DiscretizedTheta:
    """K equally spaced preference values on [0, 1] with a uniform prior."""

    grid: np.ndarray

    @classmethod
    def uniform(cls, k: int) -> "DiscretizedTheta":
        if k < 3:
            raise ValueError("need at least 3 grid points")
        grid = np.linspace(0.0, 1.0, k)
        grid.setflags(write=False)
        return cls(grid=grid)

    @property
    def k(self) -> int:
        return self.grid.shape[0]


@dataclass(frozen=True)
class HumanMessagePolicy:
    """Maps every grid point to a human action index (into H_ACTIONS)."""

    assignment: np.ndarray  # (K,) int

    def __eq__(self, other):
        return isinstance(other, HumanMessagePolicy) and np.array_equal(
            self.assignment, other.assignment
        )

    def middle_interval(self, thetas: DiscretizedTheta) -> tuple[float, float] | None:
        """Theta range assigned to the compromise action (1, 1), if any."""
        idx = np.flatnonzero(self.assignment == 1)
        if idx.size == 0:
            return None
        return float(thetas.grid[idx[0]]), float(thetas.grid[idx[-1]])

    def is_monotone(self) -> bool:
        return bool(np.all(np.diff(self.assignment) >= 0))


@dataclass(frozen=True)
class RobotResponsePolicy:
    """Per-message robot action plus the belief mean that justifies it."""

    response: np.ndarray  # (3,) int indices into R_ACTIONS
    posterior_means: np.ndarray  # (3,) float


def _human_reward_table(thetas: DiscretizedTheta) -> np.ndarray:
    return np.stack([PaperclipGame.action_reward(a, thetas.grid) for a in H_ACTIONS])


def _robot_reward_table(thetas: DiscretizedTheta) -> np.ndarray:
    return np.stack([PaperclipGame.action_reward(a, thetas.grid) for a in R_ACTIONS])


def expert_policy(thetas: DiscretizedTheta) -> HumanMessagePolicy:
    """Greedy immediate-reward teacher: ignores what the message teaches."""
    table = _human_reward_table(thetas)
    return HumanMessagePolicy(assignment=np.argmax(table, axis=0))


def robot_best_response(
    pi_h: HumanMessagePolicy, thetas: DiscretizedTheta
) -> RobotResponsePolicy:
    """Best robot reply to each message: plan at the conditional mean.

    A message no grid point sends is answered at the prior mean 1/2.
    """
    means = np.empty(len(H_ACTIONS))
    response = np.empty(len(H_ACTIONS), dtype=np.int64)
    for m in range(len(H_ACTIONS)):
        sent = thetas.grid[pi_h.assignment == m]
        means[m] = sent.mean() if sent.size else PRIOR_MEAN
        rewards = [PaperclipGame.action_reward(a, means[m]) for a in R_ACTIONS]
        response[m] = int(np.argmax(rewards))
    return RobotResponsePolicy(response=response, posterior_means=means)


def human_best_response(
    pi_r: RobotResponsePolicy, thetas: DiscretizedTheta
) -> HumanMessagePolicy:
    """Best human reply: maximize own reward plus the induced robot reward."""
    h = _human_reward_table(thetas)
    r = _robot_reward_table(thetas)
    totals = h + r[pi_r.response]
    return HumanMessagePolicy(assignment=np.argmax(totals, axis=0))


@dataclass(frozen=True)
class BestResponseResult:
    pi_h: HumanMessagePolicy
    pi_r: RobotResponsePolicy
    iterations: int
    converged: bool


def iterate_best_response(
    start: HumanMessagePolicy, thetas: DiscretizedTheta, max_iters: int = 50
) -> BestResponseResult:
    """Alternate robot and human best responses until the human policy is
    a fixpoint (or the iteration budget runs out, reported not raised)."""
    if max_iters < 1:
        raise ValueError("max_iters must be >= 1")
    pi_h = start
    pi_r = robot_best_response(pi_h, thetas)
    for iteration in range(1, max_iters + 1):
        nxt = human_best_response(pi_r, thetas)
        if nxt == pi_h:
            return BestResponseResult(pi_h, pi_r, iteration, True)
        pi_h = nxt
        pi_r = robot_best_response(pi_h, thetas)
    return BestResponseResult(pi_h, pi_r, max_iters, False)


def joint_value(
    pi_h: HumanMessagePolicy, pi_r: RobotResponsePolicy, thetas: DiscretizedTheta
) -> float:
    """Expected two-round reward over the uniform theta grid."""
    h = _human_reward_table(thetas)
    r = _robot_reward_table(thetas)
    k = np.arange(thetas.k)
    human_part = h[pi_h.assignment, k]
    robot_part = r[pi_r.response[pi_h.assignment], k]
    return float((human_part + robot_part).mean())


def exhaustive_joint_search(
    thetas: DiscretizedTheta,
) -> tuple[HumanMessagePolicy, RobotResponsePolicy]:
    """Best threshold-form human policy paired with its robot best response.

    Candidate policies send (0,2) below cut i, (1,1) on [i, j), (2,0) from j
    up. The search is an exact reformulation of scoring every (i, j) pair:
    per interval, the robot-best contribution is a max of three functions
    affine in (count, theta sum), so for each choice of the middle robot
    action the objective splits into u(i) + w(j) and a running-max scan
    finds the best pair in O(K). Results match the literal pair enumeration
    (see tests) while staying fast at K ~ 10^4.
    """
    grid = thetas.grid
    k = thetas.k
    prefix_n = np.arange(k + 1, dtype=float)
    prefix_t = np.concatenate([[0.0], np.cumsum(grid)])

    def robot_part(n, t):
        # max over robot actions of q*n + (p-q)*t, elementwise
        parts = [q * n + (p - q) * t for p, q in R_ACTIONS]
        return np.maximum.reduce(parts)

    def human_part(action, n, t):
        p, q = action
        return q * n + (p - q) * t

    # g_A(i): value of [0, i) under (0,2); g_C(j): value of [j, K) under (2,0)
    g_a = human_part(H_ACTIONS[0], prefix_n, prefix_t) + robot_part(prefix_n, prefix_t)
    tail_n = k - prefix_n
    tail_t = prefix_t[k] - prefix_t
    g_c = human_part(H_ACTIONS[2], tail_n, tail_t) + robot_part(tail_n, tail_t)

    best = (-np.inf, 0, 0)
    for p_r, q_r in R_ACTIONS:
        alpha = 1.0 + q_r  # middle human action (1,1) contributes n
        beta = float(p_r - q_r)
        u = g_a - alpha * prefix_n - beta * prefix_t
        w = alpha * prefix_n + beta * prefix_t + g_c
        run_best = np.maximum.accumulate(u)
        run_arg = np.empty(k + 1, dtype=np.int64)
        cur = 0
        for i in range(k + 1):  # first running argmax
            if u[i] > u[cur]:
                cur = i
            run_arg[i] = cur
        totals = run_best + w
        j = int(np.argmax(totals))
        if totals[j] > best[0]:
            best = (float(totals[j]), int(run_arg[j]), j)

    _, i, j = best
    assignment = np.full(k, 2, dtype=np.int64)
    assignment[:j] = 1
    assignment[:i] = 0
    pi_h = HumanMessagePolicy(assignment=assignment)
    return pi_h, robot_best_response(pi_h, thetas)


def thm2_mean_reduction_holds(thetas: DiscretizedTheta, weights: np.ndarray) -> bool:
    """Check, for one belief over the grid, that expected reward equals the
    reward at the mean for every robot action and that the argmaxes agree."""
    weights = np.asarray(weights, dtype=float)
    weights = weights / weights.sum()
    mean = float(weights @ thetas.grid)
    table = _robot_reward_table(thetas)
    expected = table @ weights
    at_mean = np.array([PaperclipGame.action_reward(a, mean) for a in R_ACTIONS])
    if not np.allclose(expected, at_mean, rtol=0, atol=1e-9):
        return False
    # up to ties: the mean argmax must attain the expected-value max
    return bool(at_mean[np.argmax(expected)] >= at_mean.max() - 1e-12)


def analytic_fixpoint_thresholds() -> tuple[float, float]:
    """Solve the two indifference equations for the compromise interval.

    Against the aligned robot replies, choosing (0,2) is worth 92(1-theta)
    in total, the compromise (1,1) a flat 51, and (2,0) is worth 92 theta.
    The compromise region sits between the roots of 92(1-theta) = 51 and
    92 theta = 51.
    """
    steep = H_ACTIONS[2][0] + R_ACTIONS[2][0]  # 2 + 90 = 92
    flat = H_ACTIONS[1][0] + R_ACTIONS[1][0]  # 1 + 50 = 51 (theta-independent)
    return 1.0 - flat / steep, flat / steep


def paperclip_report(k: int = 10001, max_iters: int = 50) -> dict:
    """Full equilibrium document for the CLI: fixpoint thresholds, values,
    the optimal threshold pair, and the deviation-from-expert witness."""
    thetas = DiscretizedTheta.uniform(k)
    expert = expert_policy(thetas)
    br_of_expert = robot_best_response(expert, thetas)
    reply_to_br = human_best_response(br_of_expert, thetas)
    fix = iterate_best_response(expert, thetas, max_iters)
    opt_h, opt_r = exhaustive_joint_search(thetas)
    lo, hi = analytic_fixpoint_thresholds()

    return {
        "grid_points": k,
        "analytic_thresholds": {"low": lo, "high": hi},
        "expert_pair_value": joint_value(expert, br_of_expert, thetas),
        "fixpoint": {
            "middle_interval": fix.pi_h.middle_interval(thetas),
            "iterations": fix.iterations,
            "converged": fix.converged,
            "value": joint_value(fix.pi_h, fix.pi_r, thetas),
            "responses": [R_ACTIONS[i] for i in fix.pi_r.response],
            "posterior_means": fix.pi_r.posterior_means.tolist(),
        },
        "search_optimum": {
            "middle_interval": opt_h.middle_interval(thetas),
            "value": joint_value(opt_h, opt_r, thetas),
        },
        "expert_deviation_witness": {
            "best_reply_differs_from_expert": reply_to_br != expert,
            "expert_middle_interval": expert.middle_interval(thetas),
            "best_reply_middle_interval": reply_to_br.middle_interval(thetas),
        },
    }
