"""Full planning story on ResNet-18 at a 1.04G budget.

Walks the pipeline a stage at a time, then shows what the policy choice,
the backbone share, and multi-round reallocation change.

Run from the repo root: python demos/planning_walkthrough.py
"""

import json
import pathlib

from pruneplan import (
    POLICIES,
    PlanRequest,
    apply_policy,
    build_backbone,
    config_cost,
    constant_provider,
    couple_channels,
    format_flops,
    group_importance,
    parse_model,
    partition_groups,
    plan,
    report_from_document,
)

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"
TARGET = 1_040_000_000

graph = parse_model((FIXTURES / "resnet18.json").read_text())
report = report_from_document(
    json.loads((FIXTURES / "resnet18.stats.json").read_text()), graph
)

print(f"budget M = {format_flops(TARGET)}")

backbone, pool = build_backbone(graph, TARGET, 0.8)
backbone_flops = config_cost(graph, backbone).flops
print(
    f"backbone: uniform model at {format_flops(backbone_flops)} "
    f"(<= 0.8 M), pool holds {format_flops(pool.total)}"
)

partition = partition_groups(graph, couple_channels(graph))
importance = group_importance(report, partition)
print("group importance:", [round(t, 4) for t in importance.values])

shares = apply_policy("importance_guided", importance, pool)
print("pool shares:     ", [format_flops(r) for r in shares])

result = plan(graph, constant_provider(report), PlanRequest(target_flops=TARGET))
print(
    f"plan: achieved {format_flops(result.achieved_flops)} "
    f"({result.achieved_flops / TARGET:.1%} of budget), "
    f"multipliers {[round(m, 3) for m in result.rounds[0].multipliers]}"
)
print("widths per group boundary layer:")
for members in partition.groups:
    first = members[0]
    print(
        f"  {first:22s} {graph.layer(first).out_channels:4d} -> "
        f"{result.final_config[first]:4d}"
    )

print()
print("policy comparison at the same budget:")
for policy in POLICIES:
    request = PlanRequest(target_flops=TARGET, policy=policy, seed=0)
    outcome = plan(graph, constant_provider(report), request)
    note = f", surplus {format_flops(outcome.surplus_flops)}" if outcome.surplus_flops else ""
    print(f"  {policy:18s} achieved {format_flops(outcome.achieved_flops)}{note}")

print()
print("backbone share sweep (importance-guided):")
for lam in (0.5, 0.6, 0.7, 0.8, 0.9, 1.0):
    outcome = plan(graph, constant_provider(report), PlanRequest(target_flops=TARGET, lam=lam))
    print(
        f"  lambda={lam:3.1f} backbone {format_flops(outcome.backbone_flops):>7s} "
        f"pool {format_flops(outcome.pool_total):>7s} "
        f"achieved {format_flops(outcome.achieved_flops)}"
    )

print()
print("one round vs three rounds (static stats, so shares just split):")
for rounds in (1, 3):
    outcome = plan(
        graph, constant_provider(report), PlanRequest(target_flops=TARGET, rounds=rounds)
    )
    print(
        f"  rounds={rounds} quotas {[format_flops(q) for q in outcome.pool_quotas]} "
        f"achieved {format_flops(outcome.achieved_flops)}"
    )
print(
    "note: with a static stats file every round sees the same importance;"
    " re-estimating between rounds needs the training harness in trainkit/"
)
