"""Exception types shared across the planner.

Each class maps to one CLI exit code (see ``cli.EXIT_CODES``), so keep the
hierarchy flat and the categories coarse.
"""


class PlannerError(Exception):
    """Base class for all planner failures."""

    code = "error"


class SchemaError(PlannerError):
    """A document (model description, stats file, plan) violates its schema."""

    code = "parse"


class GraphError(PlannerError):
    """Structural problem in a model graph: dangling predecessor, cycle,
    bad layer wiring, impossible spatial sizes."""

    code = "graph"


class ConstraintError(PlannerError):
    """A channel configuration breaks a coupling class or exceeds the
    original channel count of a layer."""

    code = "constraint"


class BoundError(ConstraintError):
    """A channel configuration asks for more channels than the original
    layer ever had."""

    code = "bound"


class PartitionError(PlannerError):
    """Layer grouping cannot place every coupling class inside one group."""

    code = "partition"


class CoverageError(SchemaError):
    """An importance report is missing a prunable layer or names an
    unknown one."""

    code = "coverage"


class ShapeError(SchemaError):
    """Per-layer score count disagrees with the layer's channel count."""

    code = "shape"


class InfeasibleBudgetError(PlannerError):
    """The FLOPs budget is below what the minimal one-channel model needs."""

    code = "infeasible"
