"""HTTP layer for live preference sessions.

A session wraps one EpisodeState: the server proposes a query, a human posts
"A" or "B", the belief updates, and the next query appears. The handlers are
a thin shell over the learners module, so a scripted session is bit-identical
to the same episode replayed offline with the same config and answers.

Endpoints (JSON in, JSON out; errors as {"code", "message"}):
    POST /sessions                  create a session, returns the first query
    GET  /sessions/{id}/query       the pending query (idempotent)
    POST /sessions/{id}/answer      {"choice": "A"|"B", "round": int}
    GET  /sessions/{id}/history     completed rounds in order
    GET  /sessions/{id}/belief      posterior samples as JSON
"""

from __future__ import annotations

import json
import logging
import threading
import time
import uuid
from pathlib import Path

import numpy as np
from fastapi import FastAPI
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .belief import posterior_mean
from .domains import DomainSpec, gridnav_spec, instantiate, tabletop_spec
from .envdesign import DesignBudget
from .errors import InvalidArgumentError, PrefdesignError, UndefinedCorrelationError
from .experiments import feature_grid, reward_correlation
from .learners import EpisodeState, LearnerConfig
from .seeding import derive_seed

logger = logging.getLogger(__name__)

DEFAULT_ROUNDS = 6
_QUERY_LATENCY_BUDGET_S = 10.0


class ApiError(PrefdesignError):
    """An error with an HTTP status and a stable machine-readable code."""

    def __init__(self, status: int, code: str, message: str):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message


def spec_from_payload(payload: dict) -> DomainSpec:
    """Domain selection for sessions and replays; both must agree exactly."""
    kind = payload.get("domain", "gridnav")
    geometry_seed = payload.get("geometry_seed", 0)
    horizon = payload.get("horizon")
    if not isinstance(geometry_seed, int):
        raise InvalidArgumentError("geometry_seed must be an integer")
    if horizon is not None and not isinstance(horizon, int):
        raise InvalidArgumentError("horizon must be an integer")
    if kind == "gridnav":
        return gridnav_spec(horizon=horizon or 24, geometry_seed=geometry_seed)
    if kind == "tabletop":
        return tabletop_spec(horizon=horizon or 18, geometry_seed=geometry_seed)
    raise InvalidArgumentError(f"unknown domain {kind!r}")


_LEARNER_KEYS = {
    "method",
    "epsilon",
    "n_rollouts",
    "cf_samples",
    "cf_diverse",
    "belief_k",
    "belief_burn_in",
    "rationality",
    "seed",
}
_BUDGET_KEYS = {"total_evals", "init_random", "kappa"}


def learner_from_payload(payload: dict) -> LearnerConfig:
    """Build a LearnerConfig from a JSON object, rejecting unknown keys."""
    if not isinstance(payload, dict):
        raise InvalidArgumentError("learner config must be an object")
    budget_payload = payload.get("budget", {})
    extra = set(payload) - _LEARNER_KEYS - {"budget"}
    if extra:
        raise InvalidArgumentError(f"unknown learner fields: {sorted(extra)}")
    if not isinstance(budget_payload, dict):
        raise InvalidArgumentError("budget must be an object")
    extra = set(budget_payload) - _BUDGET_KEYS
    if extra:
        raise InvalidArgumentError(f"unknown budget fields: {sorted(extra)}")
    kwargs = {k: payload[k] for k in _LEARNER_KEYS if k in payload}
    try:
        return LearnerConfig(budget=DesignBudget(**budget_payload), **kwargs)
    except TypeError as exc:
        raise InvalidArgumentError(str(exc)) from exc


class LiveSession:
    """One human-in-the-loop episode plus its HTTP bookkeeping."""

    def __init__(self, session_id, spec, learner, rounds_total, ground_truth, grid):
        self.id = session_id
        self.spec = spec
        self.rounds_total = rounds_total
        self.ground_truth = ground_truth
        self.grid = grid
        self.lock = threading.Lock()
        self.state = EpisodeState(learner, spec)

    @property
    def done(self) -> bool:
        return self.state.completed_rounds >= self.rounds_total

    def query_payload(self) -> dict:
        if self.done:
            raise ApiError(409, "session_complete", "all rounds are answered")
        started = time.monotonic()
        theta, pair = self.state.propose()
        elapsed = time.monotonic() - started
        if elapsed > _QUERY_LATENCY_BUDGET_S:
            logger.warning("query generation took %.1fs", elapsed)
        elif elapsed > 0.0:
            logger.info("query generated in %.3fs", elapsed)
        env = instantiate(self.spec, theta, self.spec.geometry_seed)
        return {
            "round": self.state.completed_rounds + 1,
            "rounds_total": self.rounds_total,
            "theta": np.asarray(theta).tolist(),
            "environment": env.to_payload(),
            "provenance": pair.provenance,
            "gain_bits": pair.gain_bits,
            "trajectory_a": list(pair.trajectory_a.states) if pair.trajectory_a else None,
            "trajectory_b": list(pair.trajectory_b.states) if pair.trajectory_b else None,
            "features_a": pair.features_a.tolist(),
            "features_b": pair.features_b.tolist(),
        }

    def answer_payload(self, choice, round_index) -> dict:
        if choice not in ("A", "B"):
            raise ApiError(400, "invalid_choice", "choice must be 'A' or 'B'")
        if not isinstance(round_index, int):
            raise ApiError(400, "invalid_round", "round must be an integer")
        if self.done:
            raise ApiError(409, "session_complete", "all rounds are answered")
        pending = self.state.completed_rounds + 1
        if round_index != pending:
            raise ApiError(
                409,
                "round_conflict",
                f"round {round_index} is not pending (expected {pending})",
            )
        done_round = self.state.submit(1 if choice == "A" else -1)
        mean = posterior_mean(self.state.belief)
        correlation = None
        if self.ground_truth is not None:
            try:
                correlation = reward_correlation(self.ground_truth, mean, self.grid)
            except UndefinedCorrelationError:
                correlation = None
        payload = {
            "round": done_round.round,
            "answer": done_round.answer,
            "posterior_mean": mean.tolist(),
            "correlation": correlation,
            "done": self.done,
            "next_query": None,
        }
        if not self.done:
            payload["next_query"] = self.query_payload()
        return payload

    def snapshot(self) -> dict:
        return {
            "id": self.id,
            "domain": self.spec.kind,
            "rounds_total": self.rounds_total,
            "completed_rounds": self.state.completed_rounds,
            "history": [qr.to_payload() for qr in self.state.history],
            "belief": json.loads(self.state.belief.to_json()),
        }


def create_app(snapshot_dir: str | None = None, static_dir: str | None = None) -> FastAPI:
    app = FastAPI(title="prefdesign sessions")
    sessions: dict[str, LiveSession] = {}
    registry_lock = threading.Lock()
    app.state.sessions = sessions

    snapshot_path = Path(snapshot_dir) if snapshot_dir else None
    if snapshot_path is not None:
        snapshot_path.mkdir(parents=True, exist_ok=True)

    @app.exception_handler(ApiError)
    async def handle_api_error(request, exc: ApiError):
        return JSONResponse(
            status_code=exc.status, content={"code": exc.code, "message": exc.message}
        )

    @app.exception_handler(InvalidArgumentError)
    async def handle_invalid(request, exc: InvalidArgumentError):
        return JSONResponse(
            status_code=400, content={"code": "invalid_argument", "message": str(exc)}
        )

    @app.exception_handler(PrefdesignError)
    async def handle_internal(request, exc: PrefdesignError):
        return JSONResponse(
            status_code=500, content={"code": "internal_error", "message": str(exc)}
        )

    def lookup(session_id: str) -> LiveSession:
        with registry_lock:
            session = sessions.get(session_id)
        if session is None:
            raise ApiError(404, "not_found", f"no session {session_id!r}")
        return session

    def write_snapshot(session: LiveSession) -> None:
        if snapshot_path is None:
            return
        target = snapshot_path / f"{session.id}.json"
        target.write_text(json.dumps(session.snapshot()), encoding="utf-8")

    @app.post("/sessions", status_code=201)
    def create_session(payload: dict):
        spec = spec_from_payload(payload)
        learner = learner_from_payload(payload.get("learner", {}))
        rounds_total = payload.get("rounds", DEFAULT_ROUNDS)
        if not isinstance(rounds_total, int) or rounds_total < 1:
            raise ApiError(400, "invalid_rounds", "rounds must be a positive integer")

        ground_truth = None
        grid = None
        if payload.get("ground_truth") is not None:
            gt = np.asarray(payload["ground_truth"], dtype=np.float64)
            if gt.shape != (spec.feature_dim,) or not np.all(np.isfinite(gt)):
                raise ApiError(
                    400,
                    "invalid_ground_truth",
                    f"ground_truth must be {spec.feature_dim} finite numbers",
                )
            if float(np.linalg.norm(gt)) == 0.0:
                raise ApiError(400, "invalid_ground_truth", "ground_truth is all zero")
            ground_truth = gt
            grid = feature_grid(spec, 2000, derive_seed(learner.seed, "metric-grid"))

        session = LiveSession(
            session_id=uuid.uuid4().hex,
            spec=spec,
            learner=learner,
            rounds_total=rounds_total,
            ground_truth=ground_truth,
            grid=grid,
        )
        with session.lock:
            first = session.query_payload()
            with registry_lock:
                sessions[session.id] = session
            write_snapshot(session)
        return {"id": session.id, "rounds_total": rounds_total, "query": first}

    @app.get("/sessions/{session_id}/query")
    def get_query(session_id: str):
        session = lookup(session_id)
        with session.lock:
            return session.query_payload()

    @app.post("/sessions/{session_id}/answer")
    def post_answer(session_id: str, payload: dict):
        session = lookup(session_id)
        with session.lock:
            result = session.answer_payload(payload.get("choice"), payload.get("round"))
            write_snapshot(session)
        return result

    @app.get("/sessions/{session_id}/history")
    def get_history(session_id: str):
        session = lookup(session_id)
        with session.lock:
            return {"rounds": [qr.to_payload() for qr in session.state.history]}

    @app.get("/sessions/{session_id}/belief")
    def get_belief(session_id: str):
        session = lookup(session_id)
        with session.lock:
            return json.loads(session.state.belief.to_json())

    if static_dir is not None:
        app.mount("/", StaticFiles(directory=static_dir, html=True), name="static")

    return app
