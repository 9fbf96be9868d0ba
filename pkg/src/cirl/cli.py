"""Command line entry points.

    cirl experiment run --config game.json [--samples N] [--out PATH]
    cirl experiment lambda-sweep --config game.json --lambdas 0.1,1,5,20,100
    cirl equilibrium paperclip [--grid K]
    cirl serve --port 8000
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import GameConfig, load_config
from .equilibrium import paperclip_report
from .harness import ExperimentSpec, run_experiment_to_files


def _load(path: str | None) -> GameConfig:
    return load_config(path) if path else GameConfig()


def _experiment_spec(args, sweep: bool) -> ExperimentSpec:
    base = _load(args.config)
    kwargs = dict(base=base, num_samples=args.samples, output_path=args.out)
    if sweep:
        kwargs["lambda_sweep"] = tuple(float(x) for x in args.lambdas.split(","))
    return ExperimentSpec(**kwargs)


def cmd_experiment_run(args) -> int:
    spec = _experiment_spec(args, sweep=False)
    summary = run_experiment_to_files(spec, workers=args.workers)
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def cmd_experiment_sweep(args) -> int:
    spec = _experiment_spec(args, sweep=True)
    summary = run_experiment_to_files(spec, workers=args.workers, sweep=True)
    json.dump(summary, sys.stdout, indent=2, sort_keys=True)
    print()
    return 0


def cmd_equilibrium_paperclip(args) -> int:
    report = paperclip_report(k=args.grid)
    json.dump(report, sys.stdout, indent=2)
    print()
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    static_dir = args.ui if args.ui and Path(args.ui).is_dir() else None
    uvicorn.run(create_app(static_dir=static_dir), host=args.host, port=args.port)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="cirl")
    sub = parser.add_subparsers(dest="command", required=True)

    experiment = sub.add_parser("experiment", help="batch experiments")
    exp_sub = experiment.add_subparsers(dest="subcommand", required=True)

    run = exp_sub.add_parser("run", help="teacher-policy x feature-count factorial")
    run.add_argument("--config", help="game config JSON (defaults when omitted)")
    run.add_argument("--samples", type=int, default=100, help="paired theta draws per condition")
    run.add_argument("--out", default="results/factorial.csv", help="results CSV path")
    run.add_argument("--workers", type=int, default=1, help="episode worker processes")
    run.set_defaults(func=cmd_experiment_run)

    sweep = exp_sub.add_parser("lambda-sweep", help="regret versus assumed rationality")
    sweep.add_argument("--config", help="game config JSON (defaults when omitted)")
    sweep.add_argument("--lambdas", required=True, help="comma-separated lambda values")
    sweep.add_argument("--samples", type=int, default=50)
    sweep.add_argument("--out", default="results/lambda_sweep.csv")
    sweep.add_argument("--workers", type=int, default=1)
    sweep.set_defaults(func=cmd_experiment_sweep)

    equilibrium = sub.add_parser("equilibrium", help="analytic game solutions")
    eq_sub = equilibrium.add_subparsers(dest="subcommand", required=True)
    paperclip = eq_sub.add_parser("paperclip", help="two-round supply game equilibrium")
    paperclip.add_argument("--grid", type=int, default=10001, help="theta grid points")
    paperclip.set_defaults(func=cmd_equilibrium_paperclip)

    serve = sub.add_parser("serve", help="live teaching session API")
    serve.add_argument("--port", type=int, default=8000)
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument(
        "--ui", default="frontend", help="frontend directory to host (omit to serve API only)"
    )
    serve.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
