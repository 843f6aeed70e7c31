"""Per-channel importance statistics and their aggregation into group scores.

Stats documents are produced by a training harness (or any framework) as::

    {"criterion": "bn_gamma", "scores": {"layer_name": [0.41, 0.02, ...]}}

The criterion names the provenance of the numbers — absolute batch-norm
scale factors, corrected filter norms, or reconstruction errors — but every
criterion flows through the same aggregation: a group's importance is the
plain mean of all per-channel scores across its member layers.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Mapping

from .archgraph import ModelGraph
from .errors import CoverageError, SchemaError, ShapeError
from .grouping import GroupPartition

CRITERIA = ("bn_gamma", "filter_norm", "reconstruction_error")


@dataclass(frozen=True)
class ImportanceReport:
    criterion: str
    scores: Mapping[str, tuple[float, ...]]

    @property
    def n_scores(self) -> int:
        return sum(len(v) for v in self.scores.values())


@dataclass(frozen=True)
class GroupImportance:
    values: tuple[float, ...]

    def __len__(self) -> int:
        return len(self.values)

    def __getitem__(self, i: int) -> float:
        return self.values[i]


def report_from_document(doc: dict, graph: ModelGraph) -> ImportanceReport:
    """Validate a parsed stats document against a graph.

    Every prunable layer must be covered with exactly out_channels scores;
    raw values may be negative (absolute values are stored).
    """
    if not isinstance(doc, dict):
        raise SchemaError("stats document must be a JSON object")
    unknown = set(doc) - {"criterion", "scores"}
    if unknown:
        raise SchemaError(f"stats document: unknown field {sorted(unknown)[0]!r}")
    criterion = doc.get("criterion")
    if criterion not in CRITERIA:
        raise SchemaError(f"field 'criterion' must be one of {list(CRITERIA)}, got {criterion!r}")
    raw = doc.get("scores")
    if not isinstance(raw, dict):
        raise SchemaError("field 'scores' must be an object mapping layer names to lists")

    prunable = set(graph.prunable_layers)
    for name in raw:
        if name not in prunable:
            raise CoverageError(f"stats name unknown or non-prunable layer {name!r}")
    missing = prunable - set(raw)
    if missing:
        raise CoverageError(f"stats missing prunable layer {sorted(missing)[0]!r}")

    scores: dict[str, tuple[float, ...]] = {}
    for name in graph.prunable_layers:
        values = raw[name]
        if not isinstance(values, list) or not all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in values
        ):
            raise SchemaError(f"scores for layer {name!r} must be a list of numbers")
        expected = graph.layer(name).out_channels
        if len(values) != expected:
            raise ShapeError(
                f"layer {name!r}: {len(values)} scores for {expected} output channels"
            )
        if any(math.isnan(v) or math.isinf(v) for v in values):
            raise SchemaError(f"scores for layer {name!r} contain non-finite values")
        scores[name] = tuple(abs(float(v)) for v in values)
    return ImportanceReport(criterion=criterion, scores=scores)


def load_stats(text: str, graph: ModelGraph) -> ImportanceReport:
    """Parse and validate a stats JSON document."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return report_from_document(doc, graph)


def report_to_document(report: ImportanceReport) -> dict:
    return {
        "criterion": report.criterion,
        "scores": {name: list(values) for name, values in report.scores.items()},
    }


def group_importance(report: ImportanceReport, partition: GroupPartition) -> GroupImportance:
    """Mean per-channel score over each group's member layers.

    The denominator is the group's total channel count as reported, so large
    layers weigh in proportionally to their width.
    """
    values = []
    for members in partition.groups:
        pooled: list[float] = []
        for name in members:
            if name not in report.scores:
                raise CoverageError(f"report does not cover grouped layer {name!r}")
            pooled.extend(report.scores[name])
        if not pooled:
            raise SchemaError(f"group {members} has no channels to average over")
        # fsum keeps the mean exactly rounded, independent of layer order
        values.append(math.fsum(pooled) / len(pooled))
    return GroupImportance(tuple(values))
