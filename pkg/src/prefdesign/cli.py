"""Command-line entry points: batch experiments, the live service, replays.

`run` executes a method-comparison experiment from a JSON config and writes
results.csv / summary.json / traces. `serve` starts the HTTP session service.
`replay` drives one scripted episode headlessly and prints the final belief
as JSON, which is the reference output for live-loop equivalence checks.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .errors import InvalidArgumentError
from .experiments import (
    ExperimentConfig,
    SimulatedUser,
    make_simulated_users,
    run_experiment,
)
from .learners import EpisodeState
from .service import create_app, learner_from_payload, spec_from_payload

_EXPERIMENT_KEYS = {
    "domain",
    "geometry_seed",
    "horizon",
    "methods",
    "users",
    "user_rationality",
    "rounds",
    "seeds_per_cell",
    "grid_points",
    "seed",
    "learner",
}


def experiment_from_payload(payload: dict, out_dir: str) -> ExperimentConfig:
    """Build an ExperimentConfig from the `run` command's JSON document."""
    if not isinstance(payload, dict):
        raise InvalidArgumentError("experiment config must be a JSON object")
    extra = set(payload) - _EXPERIMENT_KEYS
    if extra:
        raise InvalidArgumentError(f"unknown experiment fields: {sorted(extra)}")
    spec = spec_from_payload(payload)
    learner = learner_from_payload(payload.get("learner", {}))

    users_payload = payload.get("users", {})
    rationality = payload.get("user_rationality", 1.0)
    if isinstance(users_payload, dict):
        users = make_simulated_users(
            n=users_payload.get("n", 10),
            pool=users_payload.get("pool", 1000),
            d=spec.feature_dim,
            seed=users_payload.get("seed", 0),
            rationality=users_payload.get("rationality", rationality),
        )
    elif isinstance(users_payload, list):
        users = []
        for row in users_payload:
            w = np.asarray(row, dtype=np.float64)
            norm = float(np.linalg.norm(w))
            if norm == 0.0 or not np.all(np.isfinite(w)):
                raise InvalidArgumentError("user weights must be finite and nonzero")
            users.append(SimulatedUser(true_weights=w / norm, rationality=rationality))
    else:
        raise InvalidArgumentError("users must be an object or a list of weight rows")

    return ExperimentConfig(
        spec=spec,
        methods=tuple(payload.get("methods", ("CRED",))),
        users=tuple(users),
        rounds=payload.get("rounds", 20),
        seeds_per_cell=payload.get("seeds_per_cell", 3),
        grid_points=payload.get("grid_points", 10000),
        learner=learner,
        seed=payload.get("seed", 0),
        out_dir=out_dir,
    )


def _cmd_run(args) -> int:
    payload = json.loads(Path(args.config).read_text(encoding="utf-8"))
    config = experiment_from_payload(payload, args.out)
    result = run_experiment(config)
    for method in config.methods:
        rounds, means = result.method_curve(method)
        final = means[-1]
        shown = "nan" if final is None else f"{final:.3f}"
        print(f"{method}: round-{rounds[-1]} mean correlation {shown}")
    if result.summary["errors"]:
        print(f"{len(result.summary['errors'])} episode(s) failed; see summary.json")
    print(f"wrote {Path(args.out) / 'results.csv'}")
    return 0


def _cmd_serve(args) -> int:
    import uvicorn

    app = create_app(snapshot_dir=args.snapshot_dir, static_dir=args.static)
    uvicorn.run(app, host=args.host, port=args.port, log_level="info")
    return 0


def _cmd_replay(args) -> int:
    answers = args.answers.upper()
    if not answers or any(c not in "AB" for c in answers):
        raise InvalidArgumentError("--answers must be a nonempty string of A/B")
    if args.rounds is not None and args.rounds != len(answers):
        raise InvalidArgumentError(
            f"--rounds {args.rounds} does not match {len(answers)} answers"
        )

    session_payload = {
        "domain": args.domain,
        "geometry_seed": args.geometry_seed,
    }
    if args.horizon is not None:
        session_payload["horizon"] = args.horizon
    spec = spec_from_payload(session_payload)

    learner_payload = json.loads(args.learner_json) if args.learner_json else {}
    learner_payload.setdefault("method", args.method)
    learner_payload.setdefault("seed", args.seed)
    learner_payload.setdefault("rationality", args.rationality)
    learner_payload.setdefault("belief_k", args.belief_k)
    learner = learner_from_payload(learner_payload)

    state = EpisodeState(learner, spec)
    for choice in answers:
        state.propose()
        state.submit(1 if choice == "A" else -1)
    print(state.belief.to_json())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="prefdesign",
        description="Active preference learning with designed environments.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a batch experiment from a JSON config")
    run_p.add_argument("--config", required=True, help="path to the experiment JSON")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.set_defaults(fn=_cmd_run)

    serve_p = sub.add_parser("serve", help="serve the live session API")
    serve_p.add_argument("--host", default="127.0.0.1")
    serve_p.add_argument("--port", type=int, default=8080)
    serve_p.add_argument("--static", default=None, help="directory of built UI assets")
    serve_p.add_argument("--snapshot-dir", default=None, help="write session snapshots here")
    serve_p.set_defaults(fn=_cmd_serve)

    replay_p = sub.add_parser(
        "replay", help="replay a scripted episode and print the final belief JSON"
    )
    replay_p.add_argument("--method", default="CRED")
    replay_p.add_argument("--domain", default="gridnav")
    replay_p.add_argument("--rounds", type=int, default=None)
    replay_p.add_argument("--seed", type=int, default=0)
    replay_p.add_argument("--answers", required=True, help="choice string, e.g. ABBABA")
    replay_p.add_argument("--rationality", type=float, default=1.0)
    replay_p.add_argument("--belief-k", type=int, default=1000)
    replay_p.add_argument("--geometry-seed", type=int, default=0)
    replay_p.add_argument("--horizon", type=int, default=None)
    replay_p.add_argument(
        "--learner-json",
        default=None,
        help="full learner config as JSON; explicit flags fill unset fields",
    )
    replay_p.set_defaults(fn=_cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except InvalidArgumentError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
