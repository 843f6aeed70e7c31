"""Command-line front end.

Subcommands::

    pruneplan flops <model.json>
    pruneplan groups <model.json>
    pruneplan plan <model.json> --stats <stats.json> --target-flops 1.04G [...]
    pruneplan compare-policies <model.json> --stats <stats.json> --target-flops ...

Exit codes: 0 success, 2 bad flags/usage (argparse), 3 document parse or
stats validation failure, 4 file not found, 5 infeasible budget,
6 constraint/grouping violation. Errors print one ``error[<code>]: ...``
line on stderr.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .archgraph import ModelGraph, parse_model
from .costmodel import format_flops, parse_flops, total_cost
from .errors import (
    ConstraintError,
    GraphError,
    InfeasibleBudgetError,
    PartitionError,
    PlannerError,
    SchemaError,
)
from .grouping import couple_channels, partition_groups
from .importance import load_stats
from .reallocate import (
    POLICIES,
    PlanRequest,
    constant_provider,
    plan,
    plan_to_document,
)

EXIT_USAGE = 2
EXIT_PARSE = 3
EXIT_NOT_FOUND = 4
EXIT_INFEASIBLE = 5
EXIT_CONSTRAINT = 6


class CliError(Exception):
    def __init__(self, exit_code: int, code: str, message: str):
        super().__init__(message)
        self.exit_code = exit_code
        self.code = code


def _read(path: str) -> str:
    try:
        with open(path, "r", encoding="utf-8") as handle:
            return handle.read()
    except FileNotFoundError:
        raise CliError(EXIT_NOT_FOUND, "not-found", f"no such file: {path}") from None
    except OSError as exc:
        raise CliError(EXIT_NOT_FOUND, "not-found", f"cannot read {path}: {exc}") from None


def _load_model(path: str) -> ModelGraph:
    try:
        return parse_model(_read(path))
    except (SchemaError, GraphError) as exc:
        raise CliError(EXIT_PARSE, exc.code, f"{path}: {exc}") from None


def _emit(document: dict, out_path: str | None) -> None:
    text = json.dumps(document, indent=2) + "\n"
    if out_path:
        with open(out_path, "w", encoding="utf-8") as handle:
            handle.write(text)
    else:
        sys.stdout.write(text)


def _positive_flops(text: str) -> int:
    try:
        return parse_flops(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _lambda_arg(text: str) -> float:
    value = float(text)
    if not (0.0 < value <= 1.0):
        raise argparse.ArgumentTypeError(f"lambda must be in (0, 1], got {text}")
    return value


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text}")
    return value


def cmd_flops(args) -> int:
    graph = _load_model(args.model)
    cost = total_cost(graph)
    print(f"flops: {cost.flops} ({format_flops(cost.flops)})")
    print(f"params: {cost.params} ({format_flops(cost.params)})")
    return 0


def cmd_groups(args) -> int:
    graph = _load_model(args.model)
    try:
        coupling = couple_channels(graph)
        partition = partition_groups(graph, coupling)
    except (PartitionError, GraphError) as exc:
        raise CliError(EXIT_CONSTRAINT, exc.code, str(exc)) from None
    document = {
        "n_groups": partition.n_groups,
        "groups": [
            {
                "spatial_size": list(partition.spatial_sizes[i]),
                "total_channels": partition.group_channels[i],
                "layers": list(partition.groups[i]),
            }
            for i in range(partition.n_groups)
        ],
        "coupling_classes": [list(cls) for cls in coupling.classes if len(cls) > 1],
    }
    _emit(document, args.out)
    return 0


def _plan_once(graph: ModelGraph, args, policy: str):
    stats_text = _read(args.stats)
    try:
        report = load_stats(stats_text, graph)
    except SchemaError as exc:
        raise CliError(EXIT_PARSE, exc.code, f"{args.stats}: {exc}") from None
    if args.criterion and report.criterion != args.criterion:
        raise CliError(
            EXIT_PARSE,
            "criterion",
            f"stats file criterion {report.criterion!r} does not match --criterion {args.criterion!r}",
        )
    request = PlanRequest(
        target_flops=args.target_flops,
        lam=args.lam,
        policy=policy,
        rounds=args.rounds,
        seed=args.seed,
    )
    try:
        return plan(graph, constant_provider(report), request)
    except InfeasibleBudgetError as exc:
        raise CliError(EXIT_INFEASIBLE, exc.code, str(exc)) from None
    except (ConstraintError, PartitionError) as exc:
        raise CliError(EXIT_CONSTRAINT, exc.code, str(exc)) from None


def cmd_plan(args) -> int:
    graph = _load_model(args.model)
    result = _plan_once(graph, args, args.policy)
    _emit(plan_to_document(result), args.out)
    return 0


def cmd_compare_policies(args) -> int:
    graph = _load_model(args.model)
    partition = partition_groups(graph, couple_channels(graph))
    rows = []
    for policy in POLICIES:
        result = _plan_once(graph, args, policy)
        group_totals = [
            sum(result.final_config[name] for name in members)
            for members in partition.groups
        ]
        rows.append((policy, result.achieved_flops, result.surplus_flops, group_totals))
    width = max(len(policy) for policy, *_ in rows)
    print(f"{'policy':<{width}}  {'achieved':>14}  {'surplus':>12}  group channel totals")
    for policy, achieved, surplus, totals in rows:
        print(
            f"{policy:<{width}}  {achieved:>14} "
            f" {surplus:>12}  {' '.join(str(t) for t in totals)}"
        )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pruneplan",
        description="FLOPs-budgeted channel pruning planner",
    )
    parser.add_argument("--version", action="version", version=f"pruneplan {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    p_flops = subparsers.add_parser("flops", help="count FLOPs and parameters of a model")
    p_flops.add_argument("model", help="model description JSON")
    p_flops.set_defaults(func=cmd_flops)

    p_groups = subparsers.add_parser("groups", help="show coupling classes and layer groups")
    p_groups.add_argument("model", help="model description JSON")
    p_groups.add_argument("--out", help="write JSON here instead of stdout")
    p_groups.set_defaults(func=cmd_groups)

    def add_plan_flags(sub):
        sub.add_argument("model", help="model description JSON")
        sub.add_argument("--stats", required=True, help="importance stats JSON")
        sub.add_argument(
            "--target-flops",
            required=True,
            type=_positive_flops,
            dest="target_flops",
            help="FLOPs budget, e.g. 1.04e9 or 1.04G or 211M",
        )
        sub.add_argument(
            "--lambda",
            type=_lambda_arg,
            default=0.8,
            dest="lam",
            help="backbone share of the budget (default 0.8)",
        )
        sub.add_argument("--rounds", type=_positive_int, default=1, help="allocation rounds (default 1)")
        sub.add_argument("--seed", type=int, default=0, help="seed for the random policy (default 0)")
        sub.add_argument(
            "--criterion",
            choices=["bn_gamma", "filter_norm", "reconstruction_error"],
            help="require the stats file to carry this criterion",
        )
        sub.add_argument("--out", help="write the plan here instead of stdout")

    p_plan = subparsers.add_parser("plan", help="compute a pruned channel configuration")
    add_plan_flags(p_plan)
    p_plan.add_argument(
        "--policy",
        choices=list(POLICIES),
        default="importance_guided",
        help="pool allocation policy (default importance_guided)",
    )
    p_plan.set_defaults(func=cmd_plan)

    p_compare = subparsers.add_parser(
        "compare-policies", help="plan with all four policies on identical inputs"
    )
    add_plan_flags(p_compare)
    p_compare.set_defaults(func=cmd_compare_policies)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return exc.exit_code
    except PlannerError as exc:  # uncategorized planner failure
        print(f"error[{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_CONSTRAINT


if __name__ == "__main__":
    sys.exit(main())
