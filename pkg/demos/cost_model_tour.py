"""Tour of the cost model: totals, uniform scaling, and the quadratic law.

Run from the repo root: python demos/cost_model_tour.py
"""

import pathlib

from pruneplan import config_cost, format_flops, parse_model, scale_uniform, total_cost

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

print("Full-model totals (multiply-accumulates, conv + linear weights only):")
for name in ("resnet18", "resnet50", "mobilenetv2"):
    graph = parse_model((FIXTURES / f"{name}.json").read_text())
    cost = total_cost(graph)
    print(
        f"  {name:12s} {format_flops(cost.flops):>7s} flops, "
        f"{format_flops(cost.params):>7s} params, {graph.n_prunable} prunable layers"
    )

print()
print("Uniform width scaling on ResNet-50 (interior convs shrink ~u^2):")
graph = parse_model((FIXTURES / "resnet50.json").read_text())
full = total_cost(graph).flops
for u in (1.0, 0.85, 0.75, 0.5, 0.35):
    flops = config_cost(graph, scale_uniform(graph, u)).flops
    print(f"  u={u:4.2f} -> {format_flops(flops):>7s}  ({flops / full:5.1%} of full)")
