"""Session API for live teaching: a human drives the demonstration step by
step, watches the robot's inferred reward update, then triggers deployment.

Endpoints:
    POST /sessions                create (config overrides, optional theta_gt)
    POST /sessions/{id}/step      advance the demonstration by one action
    POST /sessions/{id}/deploy    roll out the robot and score the episode
    GET  /sessions/{id}           current session view
    GET  /healthz

Per-step belief summaries are previews computed from the demonstration
prefix under the prefix-length likelihood; the committed posterior is
produced once, from the full demonstration, by the same update the batch
harness uses, so a session's scorecard matches a batch episode bit for bit.
"""

from __future__ import annotations

import os
import threading
import uuid
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import belief as belief_mod
from .config import GameConfig, child_seed, config_from_dict, config_to_dict, rng_for
from .games import ACTION_NAMES, GridWorld, make_trajectory, sample_theta, state_rewards
from .harness import evaluate_demo
from .planning import greedy_rollout, log_partition_layers, value_iteration

TOP_PARTICLES = 5


class ServiceError(Exception):
    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


class CreateSessionRequest(BaseModel):
    overrides: dict = {}
    theta_gt: Optional[list[float]] = None
    point_mass_belief: bool = False


class StepRequest(BaseModel):
    action: str
    idempotency_token: Optional[str] = None


class DeployRequest(BaseModel):
    idempotency_token: Optional[str] = None


@dataclass
class Session:
    id: str
    world: GridWorld
    theta_gt: np.ndarray
    prior: belief_mod.Belief
    partition_layers: np.ndarray  # (learning_steps + 1, M)
    phase: str = "learning"
    actions: list[int] = field(default_factory=list)
    committed: belief_mod.Belief | None = None
    scorecard: dict | None = None
    responses: dict[str, dict] = field(default_factory=dict)
    lock: threading.Lock = field(default_factory=threading.Lock)

    @property
    def config(self) -> GameConfig:
        return self.world.config

    @property
    def states(self) -> list[int]:
        out = [self.world.initial_state]
        for a in self.actions:
            out.append(self.world.step(out[-1], a))
        return out

    def preview_weights(self) -> np.ndarray:
        """Belief weights under the truncated-prefix likelihood (preview only)."""
        t = len(self.actions)
        prefix = make_trajectory(self.world, self.world.initial_state, self.actions)
        log_lik = (
            self.config.lambda_ * (self.prior.particles @ prefix.feature_sum)
            - self.partition_layers[t]
        )
        lw = self.prior.log_weights + log_lik
        lw -= lw.max()
        w = np.exp(lw)
        return w / w.sum()

    def belief_summary(self) -> dict:
        if self.committed is not None:
            weights = self.committed.weights
            preview = False
        else:
            weights = self.preview_weights()
            preview = True
        mean_theta = weights @ self.prior.particles
        map_theta = self.prior.particles[int(np.argmax(weights))]
        top = np.argsort(-weights)[:TOP_PARTICLES]
        return {
            "preview": preview,
            "mean_heatmap": state_rewards(self.world, mean_theta).tolist(),
            "map_heatmap": state_rewards(self.world, map_theta).tolist(),
            "top_particles": [
                {"index": int(i), "weight": float(weights[i])} for i in top
            ],
        }

    def view(self) -> dict:
        cfg = self.config
        return {
            "id": self.id,
            "grid_size": cfg.grid_size,
            "learning_steps": cfg.learning_steps,
            "config": config_to_dict(cfg),
            "feature_centers": self.world.features.centers.tolist(),
            "initial_state": list(self.world.state_coords(self.world.initial_state)),
            "phase": self.phase,
            "steps_remaining": cfg.learning_steps - len(self.actions),
            "path": [list(self.world.state_coords(s)) for s in self.states],
            "truth_heatmap": state_rewards(self.world, self.theta_gt).tolist(),
            "belief": self.belief_summary(),
            "scorecard": self.scorecard,
        }


class SessionStore:
    def __init__(self):
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()

    def add(self, session: Session) -> None:
        with self._lock:
            self._sessions[session.id] = session

    def get(self, session_id: str) -> Session:
        with self._lock:
            session = self._sessions.get(session_id)
        if session is None:
            raise ServiceError(404, "unknown_session", f"no session {session_id!r}")
        return session


def create_session(store: SessionStore, request: CreateSessionRequest) -> Session:
    overrides = dict(request.overrides)
    if "seed" not in overrides:
        # fresh sessions get fresh reward draws; explicit seeds replay exactly
        overrides["seed"] = int.from_bytes(os.urandom(8), "little")
    merged = {**config_to_dict(GameConfig()), **overrides}
    try:
        config = config_from_dict(merged)
    except (ValueError, TypeError) as exc:
        raise ServiceError(422, "invalid_config", str(exc)) from exc

    world = GridWorld.from_config(config)
    if request.theta_gt is not None:
        theta_gt = np.asarray(request.theta_gt, dtype=float)
        if theta_gt.shape != (config.num_features,):
            raise ServiceError(
                422,
                "invalid_theta",
                f"theta_gt must have length {config.num_features}, got {theta_gt.shape}",
            )
        if np.any(np.abs(theta_gt) > 1.0):
            raise ServiceError(
                422, "invalid_theta", "theta_gt components must lie in [-1, 1]"
            )
    else:
        theta_gt = sample_theta(config, rng_for(config.seed, "theta-gt"))

    if request.point_mass_belief:
        prior = belief_mod.Belief(
            particles=theta_gt[None, :].copy(), log_weights=np.zeros(1)
        )
    else:
        prior = belief_mod.init_belief(
            config, np.random.default_rng(child_seed(config.seed, "belief"))
        )
    layers = log_partition_layers(
        world, prior.particles, config.lambda_, config.learning_steps
    )
    session = Session(
        id=uuid.uuid4().hex,
        world=world,
        theta_gt=theta_gt,
        prior=prior,
        partition_layers=layers,
    )
    store.add(session)
    return session


def step_session(session: Session, request: StepRequest) -> dict:
    with session.lock:
        token = request.idempotency_token
        if token and token in session.responses:
            return session.responses[token]
        if session.phase != "learning":
            raise ServiceError(
                409, "wrong_phase", f"cannot step a session in phase {session.phase!r}"
            )
        if request.action not in ACTION_NAMES:
            raise ServiceError(
                422,
                "invalid_action",
                f"action must be one of {list(ACTION_NAMES)}, got {request.action!r}",
            )
        session.actions.append(ACTION_NAMES.index(request.action))
        remaining = session.config.learning_steps - len(session.actions)
        if remaining == 0:
            demo = make_trajectory(
                session.world, session.world.initial_state, session.actions
            )
            session.committed = belief_mod.update(
                session.prior, session.world, demo, session.config.lambda_
            )
            session.phase = "deployed"
        response = {
            "state": list(session.world.state_coords(session.states[-1])),
            "steps_remaining": remaining,
            "phase": session.phase,
            "path": [list(session.world.state_coords(s)) for s in session.states],
            "belief": session.belief_summary(),
        }
        if token:
            session.responses[token] = response
        return response


def deploy_session(session: Session, request: DeployRequest) -> dict:
    with session.lock:
        token = request.idempotency_token
        if token and token in session.responses:
            return session.responses[token]
        if session.phase != "deployed":
            raise ServiceError(
                409,
                "wrong_phase",
                f"deploy requires a completed demonstration, phase is {session.phase!r}",
            )
        cfg = session.config
        demo = make_trajectory(session.world, session.world.initial_state, session.actions)
        result, posterior = evaluate_demo(
            session.world,
            session.theta_gt,
            demo,
            cfg.lambda_,
            belief_seed=0,  # unused: the session's own prior is passed
            prior_belief=session.prior,
        )
        theta_hat = belief_mod.posterior_mean(posterior)
        start = int(rng_for(cfg.seed, "deploy-start").integers(session.world.num_states))
        plan = value_iteration(session.world, theta_hat, cfg.deployment_steps)
        rollout = greedy_rollout(session.world, plan, start, cfg.deployment_steps)
        session.scorecard = {
            "start_state": list(session.world.state_coords(start)),
            "rollout": [list(session.world.state_coords(s)) for s in rollout.states],
            "theta_hat_heatmap": state_rewards(session.world, theta_hat).tolist(),
            "map_heatmap": state_rewards(
                session.world, belief_mod.map_estimate(posterior)
            ).tolist(),
            "regret": result.regret,
            "kl": result.kl,
            "reward_l2": result.reward_l2,
        }
        session.phase = "closed"
        response = {**session.scorecard, "phase": session.phase}
        if token:
            session.responses[token] = response
        return response


def create_app(static_dir: str | os.PathLike | None = None) -> FastAPI:
    """API app; pass a built frontend directory to also host the UI."""
    app = FastAPI(title="cirl teaching service")
    store = SessionStore()

    @app.exception_handler(ServiceError)
    async def service_error_handler(_: Request, exc: ServiceError):
        return JSONResponse(
            status_code=exc.status,
            content={"error": {"code": exc.code, "message": exc.message}},
        )

    @app.get("/healthz")
    def healthz() -> dict:
        return {"status": "ok"}

    @app.post("/sessions")
    def post_sessions(request: CreateSessionRequest) -> dict:
        return create_session(store, request).view()

    @app.get("/sessions/{session_id}")
    def get_session(session_id: str, belief: str = "summary") -> dict:
        session = store.get(session_id)
        view = session.view()
        if belief == "full":
            # full particle snapshot (heavy; for tooling and result stores)
            committed = session.committed if session.committed is not None else session.prior
            view["belief_document"] = belief_mod.to_document(committed)
        return view

    @app.post("/sessions/{session_id}/step")
    def post_step(session_id: str, request: StepRequest) -> dict:
        return step_session(store.get(session_id), request)

    @app.post("/sessions/{session_id}/deploy")
    def post_deploy(session_id: str, request: DeployRequest) -> dict:
        return deploy_session(store.get(session_id), request)

    if static_dir is not None:
        from fastapi.staticfiles import StaticFiles

        # mounted last: API routes above keep precedence
        app.mount("/", StaticFiles(directory=os.fspath(static_dir), html=True))

    return app
