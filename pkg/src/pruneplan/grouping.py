"""Coupling classes and layer groups.

Residual additions force the layers feeding them to keep equal channel
counts after pruning, and a depthwise conv is tied to its producer because
its input and output widths are the same thing. ``couple_channels`` closes
those constraints into equivalence classes with a union-find.

``partition_groups`` then buckets prunable layers by the spatial size of
their output feature map, largest first. Two fixups keep every coupling
class inside a single group so one expansion multiplier can serve the whole
class:

* a class whose members straddle a downsampling step (a stem conv feeding a
  residual trunk through a pool, or an expansion conv feeding a strided
  depthwise) is placed whole into the group of its most-downsampled member,
  i.e. with the block it feeds;
* any remaining single-layer group is merged into the adjacent later group,
  repeated to fixpoint, so no group of one layer sits ahead of a real group.
"""

from __future__ import annotations

from dataclasses import dataclass

from .archgraph import ModelGraph, coupling_pairs
from .errors import PartitionError


class _UnionFind:
    def __init__(self, items):
        self.parent = {item: item for item in items}

    def find(self, item):
        root = item
        while self.parent[root] != root:
            root = self.parent[root]
        while self.parent[item] != root:
            self.parent[item], item = root, self.parent[item]
        return root

    def union(self, a, b):
        ra, rb = self.find(a), self.find(b)
        if ra != rb:
            self.parent[rb] = ra


@dataclass(frozen=True)
class CouplingClasses:
    """Partition of prunable layers into equal-channel classes, singletons
    included. Classes and members keep graph (topological) order."""

    classes: tuple[tuple[str, ...], ...]

    def class_of(self, name: str) -> tuple[str, ...]:
        for cls in self.classes:
            if name in cls:
                return cls
        raise KeyError(name)


@dataclass(frozen=True)
class GroupPartition:
    """Ordered groups of prunable layers plus per-group total channel count."""

    groups: tuple[tuple[str, ...], ...]
    group_channels: tuple[int, ...]
    spatial_sizes: tuple[tuple[int, int], ...]

    @property
    def n_groups(self) -> int:
        return len(self.groups)

    def group_of(self, name: str) -> int:
        for i, members in enumerate(self.groups):
            if name in members:
                return i
        raise KeyError(name)


def couple_channels(graph: ModelGraph) -> CouplingClasses:
    """Finest partition of prunable layers satisfying all equal-channel
    constraints from adds and depthwise convs."""
    prunable = list(graph.prunable_layers)
    uf = _UnionFind(prunable)
    for a, b in coupling_pairs(graph):
        if a not in uf.parent or b not in uf.parent:
            pinned = a if a not in uf.parent else b
            raise PartitionError(
                f"coupling ties non-prunable layer {pinned!r} to prunable layers"
            )
        uf.union(a, b)
    order = {name: i for i, name in enumerate(prunable)}
    buckets: dict[str, list[str]] = {}
    for name in prunable:
        buckets.setdefault(uf.find(name), []).append(name)
    classes = sorted(buckets.values(), key=lambda cls: min(order[n] for n in cls))
    return CouplingClasses(tuple(tuple(cls) for cls in classes))


def partition_groups(graph: ModelGraph, coupling: CouplingClasses) -> GroupPartition:
    """Group prunable layers by output spatial size, largest first."""
    order = {name: i for i, name in enumerate(graph.prunable_layers)}
    if not order:
        raise PartitionError("graph has no prunable layers to partition")

    # A whole class lands in the group of its most-downsampled member.
    def class_key(cls: tuple[str, ...]) -> tuple[int, int]:
        return min((graph.out_spatial(n) for n in cls), key=lambda hw: hw[0] * hw[1])

    by_size: dict[tuple[int, int], list[str]] = {}
    for cls in coupling.classes:
        key = class_key(cls)
        by_size.setdefault(key, []).extend(cls)

    sizes = sorted(by_size, key=lambda hw: hw[0] * hw[1], reverse=True)
    groups = [sorted(by_size[s], key=order.__getitem__) for s in sizes]
    sizes = list(sizes)

    # Merge single-layer groups into the next group until none precede one.
    merged = True
    while merged:
        merged = False
        for i in range(len(groups) - 1):
            if len(groups[i]) == 1:
                groups[i + 1] = sorted(groups[i] + groups[i + 1], key=order.__getitem__)
                del groups[i]
                del sizes[i]
                merged = True
                break

    counts = tuple(
        sum(graph.layer(n).out_channels for n in members) for members in groups
    )
    for members, total in zip(groups, counts):
        if total <= 0:
            raise PartitionError(f"group {members} has no output channels")
    return GroupPartition(
        groups=tuple(tuple(m) for m in groups),
        group_channels=counts,
        spatial_sizes=tuple(sizes),
    )
