"""Command line entrypoint for the cascade-liability solvers and experiments."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, NoReturn, Optional

from dotenv import load_dotenv
from pydantic import ValidationError

from liabilitychain import configure_logging
from liabilitychain.commands import SOLUTION_KINDS, cmd_liability, cmd_poa, cmd_simulate, cmd_solve, cmd_verify
from liabilitychain.errors import LiabilityChainError, ModelValidationError
from liabilitychain.model.technology import FAMILIES, technology_from_dict
from liabilitychain.models import PoaConfig, RunConfig, SimConfig
from liabilitychain.tracing import log_event
from liabilitychain.verify import DEFAULT_SIZES, parse_sizes

_LOGGER = logging.getLogger("cascade")


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors are input errors and exit with status 1."""

    def error(self, message: str) -> NoReturn:
        self.print_usage(sys.stderr)
        self.exit(ModelValidationError.exit_code, f"{self.prog}: error: {message}\n")


def parse_args(argv: Optional[List[str]] = None) -> argparse.Namespace:
    parser = _ArgumentParser(description="Liability rules and investments in sequential disruption chains")
    parser.add_argument("--seed", type=int, default=0, help="Root seed for every random draw (default: 0)")
    parser.add_argument("--out", type=Path, default=Path("results"), help="Output directory (default: results)")
    parser.add_argument("--tol", type=float, default=None, help="Override of the solver tolerance")
    parser.add_argument("--log-level", default="WARNING", help="Python logging level (default: WARNING)")
    subparsers = parser.add_subparsers(dest="command", required=True)

    solve = subparsers.add_parser("solve", help="Efficient or equilibrium investments for a problem file")
    solve.add_argument("problem", type=Path, help="Problem JSON file")
    solve.add_argument("--mode", default="efficient", choices=["efficient", "equilibrium"])
    solve.add_argument(
        "--solution",
        default=None,
        help=f"Liability solution ({' | '.join(SOLUTION_KINDS)}); required for equilibrium mode",
    )

    liability = subparsers.add_parser("liability", help="Liability matrix and axiom audit of a solution")
    liability.add_argument("problem", type=Path, help="Problem JSON file")
    liability.add_argument("--solution", required=True, help=" | ".join(SOLUTION_KINDS))

    simulate = subparsers.add_parser("simulate", help="Monte Carlo study of first-best liabilities")
    simulate.add_argument("--agents", type=int, default=8)
    simulate.add_argument("--reps", type=int, default=10_000)
    simulate.add_argument("--loss-min", type=float, default=1.0)
    simulate.add_argument("--loss-max", type=float, default=100.0)
    simulate.add_argument("--tech", default="sqrt", choices=sorted(FAMILIES))
    simulate.add_argument(
        "--tech-params",
        default="",
        help='Technology parameters encoded as JSON, e.g. \'{"scale": 2.0}\'',
    )
    simulate.add_argument("--workers", type=int, default=1, help="Worker processes for the replications")
    simulate.add_argument("--per-instance", action="store_true", help="Also write every instance's rows")
    simulate.add_argument("--certify", action="store_true", help="Multistart-certify every efficient solve")
    simulate.add_argument("--svg", action="store_true", help="Render the two-panel figure")

    poa = subparsers.add_parser("poa", help="Efficiency loss of the disruptor-pays rule")
    poa.add_argument("--agents", type=int, default=10)
    poa.add_argument("--epsilon", type=float, default=0.01)
    poa.add_argument("--bound", type=float, default=None, help="Report whether the ratio exceeds this value")

    verify = subparsers.add_parser("verify", help="Numerical verification report")
    verify.add_argument(
        "--sizes",
        default=",".join(str(size) for size in DEFAULT_SIZES),
        help="Comma separated agent counts (default: %(default)s)",
    )
    verify.add_argument("--draws", type=int, default=1, help="Random problems per size")

    return parser.parse_args(argv)


def _technology(args: argparse.Namespace) -> Dict[str, Any]:
    params: Dict[str, Any] = {}
    if args.tech_params:
        try:
            params = json.loads(args.tech_params)
        except json.JSONDecodeError as exc:
            raise ModelValidationError(f"Invalid --tech-params payload: {exc}") from exc
        if not isinstance(params, dict):
            raise ModelValidationError("Technology parameters JSON must decode to an object")
    return {"family": args.tech, **params}


def dispatch(args: argparse.Namespace) -> int:
    run = RunConfig(command=args.command, seed=args.seed, out=args.out, tol=args.tol, log_level=args.log_level)

    if run.command == "solve":
        return cmd_solve(args.problem, args.mode, args.solution, run)
    if run.command == "liability":
        return cmd_liability(args.problem, args.solution, run)
    if run.command == "simulate":
        cfg = SimConfig(
            n=args.agents,
            reps=args.reps,
            loss_low=args.loss_min,
            loss_high=args.loss_max,
            technology=technology_from_dict(_technology(args)),
            seed=run.seed,
            workers=args.workers,
            per_instance=args.per_instance,
            certify=args.certify,
        )
        return cmd_simulate(cfg, run, svg=args.svg)
    if run.command == "poa":
        return cmd_poa(PoaConfig(n=args.agents, epsilon=args.epsilon, bound=args.bound), run)
    try:
        sizes = parse_sizes(args.sizes)
    except ValueError as exc:
        raise ModelValidationError(f"Invalid --sizes: {exc}") from exc
    return cmd_verify(sizes, run, draws=args.draws)


def main(argv: Optional[List[str]] = None) -> int:
    load_dotenv()
    args = parse_args(argv)
    configure_logging(args.log_level, command=args.command, seed=args.seed)
    try:
        return dispatch(args)
    except ValidationError as exc:
        messages = "; ".join(str(error["msg"]) for error in exc.errors())
        log_event(_LOGGER, logging.ERROR, "cascade.invalid_config", errors=messages)
        print(f"error: {messages}", file=sys.stderr)
        return ModelValidationError.exit_code
    except LiabilityChainError as exc:
        log_event(_LOGGER, logging.ERROR, "cascade.failed", error=type(exc).__name__, exit_code=exc.exit_code)
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
