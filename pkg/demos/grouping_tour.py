"""How residual wiring turns into coupling classes and spatial groups.

Run from the repo root: python demos/grouping_tour.py
"""

import pathlib

from pruneplan import couple_channels, parse_model, partition_groups

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"

for name in ("resnet18", "mobilenetv2"):
    graph = parse_model((FIXTURES / f"{name}.json").read_text())
    coupling = couple_channels(graph)
    partition = partition_groups(graph, coupling)

    print(f"== {name}")
    print(f"   {graph.n_prunable} prunable layers, {partition.n_groups} groups")
    tied = [cls for cls in coupling.classes if len(cls) > 1]
    print(f"   {len(tied)} non-trivial coupling classes, e.g.:")
    for cls in tied[:3]:
        print(f"     {' == '.join(cls)}")
    for i, members in enumerate(partition.groups):
        h, w = partition.spatial_sizes[i]
        print(
            f"   group {i + 1}: {h}x{w} maps, {len(members)} layers, "
            f"{partition.group_channels[i]} channels "
            f"({members[0]} ... {members[-1]})"
        )
    print()
