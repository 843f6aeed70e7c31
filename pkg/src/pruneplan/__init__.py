"""FLOPs-budgeted channel pruning planner.

Plans a pruned channel configuration for a CNN by uniformly over-pruning it
below the budget, then redistributing the withheld FLOPs toward layer
groups with higher average per-channel importance.
"""

__version__ = "0.1.0"

from .archgraph import (
    ChannelConfig,
    LayerSpec,
    ModelGraph,
    apply_channel_config,
    graph_from_document,
    graph_to_document,
    identity_config,
    make_document,
    parse_model,
    scale_uniform,
    serialize_model,
)
from .costmodel import ResourceCount, config_cost, format_flops, layer_cost, parse_flops, total_cost
from .errors import (
    BoundError,
    ConstraintError,
    CoverageError,
    GraphError,
    InfeasibleBudgetError,
    PartitionError,
    PlannerError,
    SchemaError,
    ShapeError,
)
from .grouping import CouplingClasses, GroupPartition, couple_channels, partition_groups
from .importance import (
    GroupImportance,
    ImportanceReport,
    group_importance,
    load_stats,
    report_from_document,
    report_to_document,
)
from .reallocate import (
    POLICIES,
    AllocationPlan,
    PlanRequest,
    ResourcePool,
    apply_policy,
    build_backbone,
    constant_provider,
    expand_groups,
    largest_remainder,
    plan,
    plan_to_document,
)

__all__ = [
    "AllocationPlan",
    "BoundError",
    "ChannelConfig",
    "ConstraintError",
    "CouplingClasses",
    "CoverageError",
    "GraphError",
    "GroupImportance",
    "GroupPartition",
    "ImportanceReport",
    "InfeasibleBudgetError",
    "LayerSpec",
    "ModelGraph",
    "PartitionError",
    "PlanRequest",
    "PlannerError",
    "POLICIES",
    "ResourceCount",
    "ResourcePool",
    "SchemaError",
    "ShapeError",
    "apply_channel_config",
    "apply_policy",
    "build_backbone",
    "config_cost",
    "constant_provider",
    "couple_channels",
    "expand_groups",
    "format_flops",
    "graph_from_document",
    "graph_to_document",
    "group_importance",
    "identity_config",
    "largest_remainder",
    "layer_cost",
    "load_stats",
    "make_document",
    "parse_flops",
    "parse_model",
    "partition_groups",
    "plan",
    "plan_to_document",
    "report_from_document",
    "report_to_document",
    "scale_uniform",
    "serialize_model",
    "total_cost",
]
