"""Experiment orchestration: the teacher-policy x feature-count factorial,
the rationality sweep, cross-validation wiring, seeding, statistics, and
result persistence.

Seeding scheme: every random object derives from the base config seed via
child_seed(base, purpose, ...), so result tables are a pure function of the
ExperimentSpec. Adding conditions never shifts existing streams.

The results CSV is reproducible byte-for-byte; per-episode wall time is
therefore reported in the summary document only, and the wall_ms column is
written as 0 in every row.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats as scipy_stats

from . import belief as belief_mod
from .config import CROSS_VALIDATE, GameConfig, child_seed, config_to_dict, rng_for
from .demonstrators import (
    DEFAULT_BEAM_WIDTH,
    DemoObjective,
    cross_validate_eta,
    expert_demo,
    instructive_demo,
    target_features,
)
from .games import GridWorld, Trajectory, sample_theta, state_rewards
from .metrics import EvalResult, evaluate

POLICY_LABELS = ("expert", "br")
ETA_GRID = (0.0, 0.1, 0.3, 1.0, 3.0, 10.0)
CV_TRAINING_SEEDS = 8

RESULTS_HEADER = "condition,policy,num_features,lambda,eta,theta_index,seed,regret,kl,reward_l2,wall_ms"


@dataclass(frozen=True)
class ExperimentSpec:
    base: GameConfig = field(default_factory=GameConfig)
    policies: tuple[str, ...] = POLICY_LABELS
    feature_levels: tuple[int, ...] = (3, 10)
    num_samples: int = 100
    lambda_sweep: tuple[float, ...] | None = None
    output_path: str | Path = "results/factorial.csv"

    def __post_init__(self):
        object.__setattr__(self, "policies", tuple(self.policies))
        object.__setattr__(self, "feature_levels", tuple(self.feature_levels))
        if self.lambda_sweep is not None:
            object.__setattr__(
                self, "lambda_sweep", tuple(float(x) for x in self.lambda_sweep)
            )
        if self.num_samples < 1:
            raise ValueError("num_samples must be >= 1")
        if not self.feature_levels:
            raise ValueError("feature_levels must be non-empty")
        bad = set(self.policies) - set(POLICY_LABELS)
        if bad:
            raise ValueError(f"unknown policies: {sorted(bad)}")


@dataclass(frozen=True)
class RunRecord:
    condition: str
    policy: str
    num_features: int
    lam: float
    eta: float
    theta_index: int
    seed: int
    regret: float
    kl: float
    reward_l2: float
    wall_ms: float  # measured; summaries use it, the CSV writes 0

    @property
    def sort_key(self):
        return (self.condition, self.theta_index)


def evaluate_demo(
    world: GridWorld,
    theta_gt: np.ndarray,
    demo: Trajectory,
    lam: float,
    belief_seed: int,
    prior_belief: belief_mod.Belief | None = None,
) -> tuple[EvalResult, belief_mod.Belief]:
    """Belief update on one demonstration plus all three measures.

    The same code path serves batch experiments and the live service, which
    is what makes their scorecards bit-identical.
    """
    if prior_belief is None:
        prior_belief = belief_mod.init_belief(
            world.config, np.random.default_rng(belief_seed)
        )
    posterior = belief_mod.update(prior_belief, world, demo, lam)
    theta_hat = belief_mod.posterior_mean(posterior)
    return evaluate(world, theta_gt, theta_hat, lam), posterior


def make_demo(
    world: GridWorld, theta_gt: np.ndarray, policy_label: str, lam: float, eta: float
) -> Trajectory:
    if policy_label == "expert":
        return expert_demo(world, theta_gt)
    if policy_label == "br":
        objective = DemoObjective(
            theta=theta_gt,
            target_features=target_features(world, theta_gt, lam),
            eta=eta,
        )
        return instructive_demo(world, objective, DEFAULT_BEAM_WIDTH)
    raise ValueError(f"unknown policy label {policy_label!r}")


def run_episode(
    config: GameConfig,
    theta_gt: np.ndarray,
    policy_label: str,
    *,
    world: GridWorld | None = None,
    lam: float | None = None,
    eta: float = 1.0,
    belief_seed: int | None = None,
) -> EvalResult:
    """One teaching episode: demonstrate, infer, deploy, measure."""
    if world is None:
        world = GridWorld.from_config(config)
    if lam is None:
        lam = config.lambda_
    if belief_seed is None:
        belief_seed = child_seed(config.seed, "belief")
    demo = make_demo(world, theta_gt, policy_label, lam, eta)
    result, _ = evaluate_demo(world, theta_gt, demo, lam, belief_seed)
    return result


def resolve_eta(world: GridWorld, lam: float, base_seed: int, tag) -> float:
    """Fixed eta from the config, or cross-validation on held-out seeds."""
    eta = world.config.eta
    if eta == CROSS_VALIDATE:
        seeds = [child_seed(base_seed, "cv", tag, k) for k in range(CV_TRAINING_SEEDS)]
        return cross_validate_eta(world, ETA_GRID, seeds, lam)
    return float(eta)


def _run_pair_task(args) -> list[RunRecord]:
    """Worker: all policy episodes for one (feature level, theta index)."""
    config, policies, nf, index, eta = args
    world = GridWorld.from_config(config)
    theta = sample_theta(config, rng_for(config.seed, "theta", nf, index))
    theta_seed = child_seed(config.seed, "theta", nf, index)
    belief_seed = child_seed(config.seed, "belief", nf, index)
    records = []
    for policy in policies:
        t0 = time.perf_counter()
        result = run_episode(
            config, theta, policy, world=world, eta=eta, belief_seed=belief_seed
        )
        wall_ms = (time.perf_counter() - t0) * 1000.0
        records.append(
            RunRecord(
                condition=f"{policy}_nf{nf}",
                policy=policy,
                num_features=nf,
                lam=config.lambda_,
                eta=eta,
                theta_index=index,
                seed=theta_seed,
                regret=result.regret,
                kl=result.kl,
                reward_l2=result.reward_l2,
                wall_ms=wall_ms,
            )
        )
    return records


def _run_tasks(tasks, worker, workers: int) -> list:
    if workers <= 1:
        return [worker(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(worker, tasks, chunksize=4))


@dataclass(frozen=True)
class FactorialResult:
    records: list[RunRecord]
    eta_by_level: dict[int, float]
    paired_tests: dict

    def condition_means(self) -> dict:
        by_condition: dict[str, list[RunRecord]] = {}
        for rec in self.records:
            by_condition.setdefault(rec.condition, []).append(rec)
        out = {}
        for condition, recs in sorted(by_condition.items()):
            out[condition] = {
                "n": len(recs),
                "mean_regret": float(np.mean([r.regret for r in recs])),
                "mean_kl": float(np.mean([r.kl for r in recs])),
                "mean_reward_l2": float(np.mean([r.reward_l2 for r in recs])),
                "mean_wall_ms": float(np.mean([r.wall_ms for r in recs])),
            }
        return out


def paired_statistics(expert_vals, br_vals) -> dict:
    """One-sided paired tests of 'br improves on expert' (H1: expert > br)."""
    expert_vals = np.asarray(expert_vals, dtype=float)
    br_vals = np.asarray(br_vals, dtype=float)
    diffs = expert_vals - br_vals
    nonzero = int((diffs != 0).sum())
    wins = int((diffs > 0).sum())
    if nonzero == 0:
        sign_p = 1.0
    else:
        sign_p = float(
            scipy_stats.binomtest(wins, nonzero, 0.5, alternative="greater").pvalue
        )
    if len(diffs) >= 2 and diffs.std(ddof=1) > 0:
        t_p = float(
            scipy_stats.ttest_rel(expert_vals, br_vals, alternative="greater").pvalue
        )
    else:
        t_p = None  # undefined for constant differences; keep the JSON valid
    return {
        "mean_diff": float(diffs.mean()),
        "wins": wins,
        "ties": int(len(diffs) - nonzero),
        "n": int(len(diffs)),
        "sign_p": sign_p,
        "t_p": t_p,
    }


def run_factorial(spec: ExperimentSpec, workers: int = 1) -> FactorialResult:
    """All (policy, feature level) conditions on shared theta draws.

    The same theta index reuses the identical theta and prior belief across
    policy levels, so per-index differences are genuinely paired.
    """
    base = spec.base
    eta_by_level: dict[int, float] = {}
    tasks = []
    for nf in spec.feature_levels:
        config = base.with_overrides(num_features=nf)
        world = GridWorld.from_config(config)
        eta_by_level[nf] = resolve_eta(world, config.lambda_, base.seed, nf)
        for index in range(spec.num_samples):
            tasks.append((config, tuple(spec.policies), nf, index, eta_by_level[nf]))

    records = [rec for recs in _run_tasks(tasks, _run_pair_task, workers) for rec in recs]
    records.sort(key=lambda r: r.sort_key)

    paired = {}
    if set(POLICY_LABELS) <= set(spec.policies):
        for nf in spec.feature_levels:
            by_policy = {
                pol: sorted(
                    (r for r in records if r.num_features == nf and r.policy == pol),
                    key=lambda r: r.theta_index,
                )
                for pol in POLICY_LABELS
            }
            paired[nf] = {
                measure: paired_statistics(
                    [getattr(r, measure) for r in by_policy["expert"]],
                    [getattr(r, measure) for r in by_policy["br"]],
                )
                for measure in ("regret", "kl", "reward_l2")
            }
    return FactorialResult(records=records, eta_by_level=eta_by_level, paired_tests=paired)


def _sweep_task(args) -> list[RunRecord]:
    config, nf, lam, index, eta = args
    world = GridWorld.from_config(config)
    theta = sample_theta(config, rng_for(config.seed, "sweep-theta", index))
    belief_seed = child_seed(config.seed, "sweep-belief", index)
    t0 = time.perf_counter()
    result = run_episode(
        config, theta, "br", world=world, lam=lam, eta=eta, belief_seed=belief_seed
    )
    wall_ms = (time.perf_counter() - t0) * 1000.0
    return [
        RunRecord(
            condition=f"br_nf{nf}_lam{lam:g}",
            policy="br",
            num_features=nf,
            lam=lam,
            eta=eta,
            theta_index=index,
            seed=child_seed(config.seed, "sweep-theta", index),
            regret=result.regret,
            kl=result.kl,
            reward_l2=result.reward_l2,
            wall_ms=wall_ms,
        )
    ]


@dataclass(frozen=True)
class SweepResult:
    records: list[RunRecord]
    eta: float
    table: list[dict]  # one row per lambda, in input order

    def regret_matrix(self) -> dict[float, np.ndarray]:
        out: dict[float, np.ndarray] = {}
        for row in self.table:
            lam = row["lambda"]
            recs = sorted(
                (r for r in self.records if r.lam == lam), key=lambda r: r.theta_index
            )
            out[lam] = np.array([r.regret for r in recs])
        return out


def run_lambda_sweep(spec: ExperimentSpec, workers: int = 1) -> SweepResult:
    """Mean instructive-teaching regret per rationality value.

    eta is resolved once at the base config (cross-validated there if so
    configured) and held fixed across the sweep: the teacher commits to a
    trade-off before learning which rationality the robot assumes.
    """
    if not spec.lambda_sweep:
        raise ValueError("lambda_sweep is empty")
    if any(lam < 0 for lam in spec.lambda_sweep):
        raise ValueError("sweep lambda values must be nonnegative")
    config = spec.base
    nf = config.num_features
    world = GridWorld.from_config(config)
    eta = resolve_eta(world, config.lambda_, config.seed, f"sweep-nf{nf}")

    # compute each distinct lambda once; duplicate entries share its rows
    distinct = list(dict.fromkeys(float(lam) for lam in spec.lambda_sweep))
    tasks = [
        (config, nf, lam, index, eta)
        for lam in distinct
        for index in range(spec.num_samples)
    ]
    records = [rec for recs in _run_tasks(tasks, _sweep_task, workers) for rec in recs]
    records.sort(key=lambda r: (r.lam, r.theta_index))

    table = []
    for lam in spec.lambda_sweep:
        vals = [r.regret for r in records if r.lam == float(lam)]
        table.append(
            {
                "lambda": float(lam),
                "eta": eta,
                "n": len(vals),
                "mean_regret": float(np.mean(vals)),
                "se_regret": float(np.std(vals, ddof=1) / np.sqrt(len(vals)))
                if len(vals) > 1
                else 0.0,
            }
        )
    return SweepResult(records=records, eta=eta, table=table)


# ---------------------------------------------------------------------------
# Persistence


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_results_csv(records: list[RunRecord], path: str | Path) -> None:
    """One record per row under the fixed header; deterministic bytes.

    wall_ms is zeroed here (timing lives in the summary document) so that
    identical specs rewrite identical files.
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    lines = [RESULTS_HEADER]
    for r in sorted(records, key=lambda r: r.sort_key):
        lines.append(
            ",".join(
                [
                    r.condition,
                    r.policy,
                    str(r.num_features),
                    _fmt(r.lam),
                    _fmt(r.eta),
                    str(r.theta_index),
                    str(r.seed),
                    _fmt(r.regret),
                    _fmt(r.kl),
                    _fmt(r.reward_l2),
                    "0",
                ]
            )
        )
    path.write_text("\n".join(lines) + "\n")


def heatmap_dump(spec: ExperimentSpec, factorial: FactorialResult) -> list[dict]:
    """Per-condition reward heatmaps for the first theta sample: the state
    rewards under the ground truth and under the inferred MAP/mean weights.
    Row-major state order, for external plotting."""
    dumps = []
    for nf in spec.feature_levels:
        config = spec.base.with_overrides(num_features=nf)
        world = GridWorld.from_config(config)
        theta = sample_theta(config, rng_for(config.seed, "theta", nf, 0))
        belief_seed = child_seed(config.seed, "belief", nf, 0)
        for policy in spec.policies:
            demo = make_demo(world, theta, policy, config.lambda_, factorial.eta_by_level[nf])
            _, posterior = evaluate_demo(world, theta, demo, config.lambda_, belief_seed)
            dumps.append(
                {
                    "condition": f"{policy}_nf{nf}",
                    "theta_index": 0,
                    "grid_size": config.grid_size,
                    "truth": state_rewards(world, theta).tolist(),
                    "map": state_rewards(world, belief_mod.map_estimate(posterior)).tolist(),
                    "mean": state_rewards(
                        world, belief_mod.posterior_mean(posterior)
                    ).tolist(),
                    "demo_states": list(demo.states),
                }
            )
    return dumps


def write_summary(
    spec: ExperimentSpec,
    factorial: FactorialResult | None,
    sweep: SweepResult | None,
    path: str | Path,
) -> dict:
    summary = {"config": config_to_dict(spec.base), "num_samples": spec.num_samples}
    if factorial is not None:
        summary["eta_by_level"] = {str(k): v for k, v in factorial.eta_by_level.items()}
        summary["condition_means"] = factorial.condition_means()
        summary["paired_tests"] = {str(k): v for k, v in factorial.paired_tests.items()}
    if sweep is not None:
        summary["lambda_sweep"] = sweep.table
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")
    return summary


def run_experiment_to_files(
    spec: ExperimentSpec, workers: int = 1, sweep: bool = False
) -> dict:
    """CLI entry: run, then write results.csv + .summary.json + .heatmaps.json."""
    out_csv = Path(spec.output_path)
    if sweep:
        sweep_result = run_lambda_sweep(spec, workers=workers)
        write_results_csv(sweep_result.records, out_csv)
        summary = write_summary(spec, None, sweep_result, out_csv.with_suffix(".summary.json"))
    else:
        factorial = run_factorial(spec, workers=workers)
        write_results_csv(factorial.records, out_csv)
        summary = write_summary(spec, factorial, None, out_csv.with_suffix(".summary.json"))
        dumps = heatmap_dump(spec, factorial)
        out_csv.with_suffix(".heatmaps.json").write_text(
            json.dumps(dumps, indent=2) + "\n"
        )
    return summary
