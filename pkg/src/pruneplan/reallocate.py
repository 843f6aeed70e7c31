"""Budgeted channel planning by redistributing a withheld FLOPs reserve.

The planner never spends the whole budget M on a uniformly scaled model.
It builds an over-pruned uniform backbone that fits within ``lam * M`` and
keeps the rest, ``M - backbone_flops``, in a resource pool. Pool resources
are then assigned to layer groups — proportionally to group importance by
default — and each group spends its share through a single expansion
multiplier applied to every member layer, never growing past the original
widths. With ``rounds > 1`` the pool is split into equal quotas and the
importance provider is consulted again before each quota is spent.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Sequence

import numpy as np

from .archgraph import (
    ChannelConfig,
    ModelGraph,
    apply_channel_config,
    channel_sources,
    identity_config,
    round_half_up,
    scale_uniform,
)
from .costmodel import config_cost, total_cost
from .errors import InfeasibleBudgetError, PlannerError
from .grouping import GroupPartition, couple_channels, partition_groups
from .importance import GroupImportance, ImportanceReport, group_importance

POLICIES = ("importance_guided", "winner_take_all", "uniform", "random")

MULTIPLIER_RESOLUTION = 1e-4

ReportProvider = Callable[[ModelGraph], ImportanceReport]


@dataclass(frozen=True)
class PlanRequest:
    target_flops: int
    lam: float = 0.8
    policy: str = "importance_guided"
    rounds: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.target_flops <= 0:
            raise ValueError(f"target_flops must be positive, got {self.target_flops}")
        if not (0.0 < self.lam <= 1.0):
            raise ValueError(f"lambda must be in (0, 1], got {self.lam}")
        if self.policy not in POLICIES:
            raise ValueError(f"policy must be one of {list(POLICIES)}, got {self.policy!r}")
        if self.rounds < 1:
            raise ValueError(f"rounds must be >= 1, got {self.rounds}")


@dataclass
class ResourcePool:
    """FLOPs reserve, handed out as one equal quota per allocation round."""

    total: int
    rounds: int = 1

    def __post_init__(self):
        self.quotas = largest_remainder([1] * self.rounds, self.total)
        self.remaining = self.total
        self._next = 0

    @property
    def round_quota(self) -> int:
        """Quota of the upcoming round (0 once the pool is exhausted)."""
        return self.quotas[self._next] if self._next < self.rounds else 0

    def draw(self) -> int:
        if self._next >= self.rounds:
            raise PlannerError("resource pool has no rounds left")
        quota = self.quotas[self._next]
        self._next += 1
        self.remaining -= quota
        return quota


@dataclass(frozen=True)
class RoundRecord:
    policy: str
    importance: tuple[float, ...]
    shares: tuple[int, ...]
    multipliers: tuple[float, ...]
    surplus: int


@dataclass(frozen=True)
class AllocationPlan:
    request: PlanRequest
    backbone_multiplier: float
    backbone_flops: int
    pool_total: int
    pool_quotas: tuple[int, ...]
    rounds: tuple[RoundRecord, ...]
    final_config: ChannelConfig
    achieved_flops: int
    surplus_flops: int


def largest_remainder(weights: Sequence[float], quota: int) -> list[int]:
    """Split an integer quota proportionally to non-negative weights.

    Exact apportionment: floors of the exact proportional shares, with the
    leftover units going to the largest fractional remainders (ties broken
    toward the lower index). The result always sums to the quota.
    """
    if not weights:
        raise ValueError("cannot split a quota over zero weights")
    if any(w < 0 for w in weights):
        raise ValueError("weights must be non-negative")
    total = sum(Fraction(w) for w in weights)
    if total == 0:
        raise ValueError("weights must not all be zero")
    exact = [Fraction(w) * quota / total for w in weights]
    base = [int(e) for e in exact]
    leftover = quota - sum(base)
    order = sorted(range(len(weights)), key=lambda i: (base[i] - exact[i], i))
    for i in order[:leftover]:
        base[i] += 1
    return base


class _CostEvaluator:
    """Fast FLOPs recount for channel configs, bypassing graph rebuilding.

    Only used on configs the planner itself constructs (known-valid); public
    entry points keep going through apply_channel_config. Agrees exactly
    with costmodel.config_cost for valid configs.
    """

    def __init__(self, graph: ModelGraph):
        fixed = {
            layer.name: layer.out_channels
            for layer in graph.layers
            if layer.name not in set(graph.prunable_layers)
        }
        self._fixed = fixed
        self._entries: list[tuple[str, str, int, int, str | None]] = []
        for layer in graph.layers:
            h, w = graph.out_spatial(layer.name)
            if layer.kind == "conv":
                src = channel_sources(graph, layer.predecessors[0])[0]
                self._entries.append((layer.kind, layer.name, layer.kernel[0] * layer.kernel[1], h * w, src))
            elif layer.kind == "depthwise_conv":
                self._entries.append((layer.kind, layer.name, layer.kernel[0] * layer.kernel[1], h * w, None))
            elif layer.kind == "linear":
                src = channel_sources(graph, layer.predecessors[0])[0]
                self._entries.append((layer.kind, layer.name, 1, 1, src))

    def flops(self, channels: dict[str, int]) -> int:
        fixed = self._fixed
        total = 0
        for kind, name, kk, area, src in self._entries:
            out = channels.get(name) or fixed[name]
            if kind == "depthwise_conv":
                total += kk * out * area
            else:
                inc = channels.get(src) or fixed[src]
                total += kk * inc * out * area
        return total


def _solve_backbone(
    graph: ModelGraph, target_flops: int, lam: float, rounds: int
) -> tuple[float, ChannelConfig, ResourcePool]:
    if target_flops <= 0:
        raise ValueError(f"target_flops must be positive, got {target_flops}")
    if not (0.0 < lam <= 1.0):
        raise ValueError(f"lambda must be in (0, 1], got {lam}")
    budget = int(lam * target_flops)
    evaluator = _CostEvaluator(graph)

    minimal = {name: 1 for name in graph.prunable_layers}
    min_flops = evaluator.flops(minimal)
    if budget < min_flops:
        raise InfeasibleBudgetError(
            f"backbone budget {budget} is below the minimal model's {min_flops} FLOPs"
        )

    full = total_cost(graph).flops
    if budget >= full:
        config = identity_config(graph)
        pool = ResourcePool(total=target_flops - full, rounds=rounds)
        return 1.0, config, pool

    lo, hi = MULTIPLIER_RESOLUTION, 1.0
    while hi - lo > MULTIPLIER_RESOLUTION:
        mid = (lo + hi) / 2.0
        if evaluator.flops(dict(scale_uniform(graph, mid).channels)) <= budget:
            lo = mid
        else:
            hi = mid
    config = scale_uniform(graph, lo)
    backbone_flops = evaluator.flops(dict(config.channels))
    pool = ResourcePool(total=target_flops - backbone_flops, rounds=rounds)
    return lo, config, pool


def build_backbone(
    graph: ModelGraph, target_flops: int, lam: float
) -> tuple[ChannelConfig, ResourcePool]:
    """Largest uniform config fitting within lam * target_flops, plus the pool.

    The multiplier is found by bisection (flops grow monotonically with it);
    the pool holds everything the backbone left unspent, target - backbone.
    """
    _, config, pool = _solve_backbone(graph, target_flops, lam, rounds=1)
    return config, pool


def _shares_for(
    policy: str,
    importance: GroupImportance,
    quota: int,
    rng: np.random.Generator | None,
) -> list[int]:
    values = list(importance.values)
    if not values:
        raise ValueError("cannot allocate over an empty importance vector")
    if policy == "importance_guided":
        weights = values
        if sum(weights) == 0:
            warnings.warn(
                "all group importances are zero; falling back to uniform shares",
                stacklevel=3,
            )
            weights = [1.0] * len(values)
    elif policy == "winner_take_all":
        winner = max(range(len(values)), key=lambda i: (values[i], -i))
        weights = [0.0] * len(values)
        weights[winner] = 1.0
    elif policy == "uniform":
        weights = [1.0] * len(values)
    elif policy == "random":
        if rng is None:
            rng = np.random.default_rng(0)
        draws = rng.random(len(values))
        while (draws == 0.0).any():
            draws = rng.random(len(values))
        weights = draws.tolist()
    else:
        raise ValueError(f"policy must be one of {list(POLICIES)}, got {policy!r}")
    return largest_remainder(weights, quota)


def apply_policy(
    policy: str,
    importance: GroupImportance,
    pool: ResourcePool,
    rng: np.random.Generator | None = None,
) -> list[int]:
    """Split the pool's current round quota into per-group shares.

    Does not advance the pool; the caller draws the quota when spending it.
    Shares sum to the quota exactly.
    """
    if pool.remaining <= 0:
        raise ValueError("resource pool is exhausted")
    return _shares_for(policy, importance, pool.round_quota, rng)


def _expand(
    graph: ModelGraph,
    start: ChannelConfig,
    partition: GroupPartition,
    shares: Sequence[int],
    importance: GroupImportance | None,
    evaluator: _CostEvaluator | None = None,
) -> tuple[dict[str, int], list[float], int]:
    if len(shares) != partition.n_groups:
        raise ValueError(
            f"got {len(shares)} shares for {partition.n_groups} groups"
        )
    evaluator = evaluator or _CostEvaluator(graph)
    config = dict(start.channels)
    caps = {name: graph.layer(name).out_channels for name in graph.prunable_layers}
    start_flops = evaluator.flops(config)
    multipliers: list[float] = []
    surplus = 0

    for members, share in zip(partition.groups, shares):
        base = evaluator.flops(config)

        def config_at(s: float) -> dict[str, int]:
            cfg = dict(config)
            for m in members:
                cfg[m] = min(caps[m], max(1, round_half_up(s * config[m])))
            return cfg

        if share <= 0:
            multipliers.append(1.0)
            continue
        s_cap = max(caps[m] / config[m] for m in members)
        if s_cap <= 1.0:
            # every member already at its original width
            multipliers.append(1.0)
            surplus += share
            continue
        capped = config_at(s_cap)
        cap_delta = evaluator.flops(capped) - base
        if cap_delta <= share:
            config = capped
            multipliers.append(s_cap)
            surplus += share - cap_delta
            continue

        lo, hi = 1.0, s_cap
        while hi - lo > MULTIPLIER_RESOLUTION:
            mid = (lo + hi) / 2.0
            if evaluator.flops(config_at(mid)) - base <= share:
                lo = mid
            else:
                hi = mid
        # Walk the remaining discrete channel steps the bisection resolution
        # may have stopped short of; each step is the smallest s that bumps
        # some member to its next channel.
        s = lo
        chosen = config_at(s)
        while True:
            thresholds = [
                (chosen[m] + 0.5 + 1e-7) / config[m] for m in members if chosen[m] < caps[m]
            ]
            if not thresholds:
                break
            s_next = min(thresholds)
            candidate = config_at(s_next)
            if candidate == chosen:
                break
            if evaluator.flops(candidate) - base <= share:
                s, chosen = s_next, candidate
            else:
                break
        config = chosen
        multipliers.append(s)

    # Defensive repair: rounding must never push past what the shares allow.
    cap = start_flops + sum(shares)
    order = sorted(
        range(partition.n_groups),
        key=lambda i: (importance[i] if importance is not None else shares[i], i),
    )
    group_idx = 0
    while evaluator.flops(config) > cap and group_idx < len(order):
        members = partition.groups[order[group_idx]]
        shrinkable = [m for m in members if config[m] > 1]
        if not shrinkable:
            group_idx += 1
            continue
        largest = max(
            shrinkable,
            key=lambda m: evaluator.flops(config) - evaluator.flops({**config, m: config[m] - 1}),
        )
        for member in _class_of(graph, largest):
            if member in config and config[member] > 1:
                config[member] -= 1
    if evaluator.flops(config) > cap:
        raise PlannerError("could not repair plan below the resource cap")
    return config, multipliers, surplus


def _class_of(graph: ModelGraph, name: str) -> tuple[str, ...]:
    for cls in couple_channels(graph).classes:
        if name in cls:
            return cls
    return (name,)


def expand_groups(
    graph: ModelGraph,
    backbone: ChannelConfig,
    partition: GroupPartition,
    shares: Sequence[int],
    importance: GroupImportance | None = None,
) -> ChannelConfig:
    """Spend per-group shares through one expansion multiplier per group.

    Groups are solved front to back: each multiplier is the largest value
    whose full-graph FLOPs increase (boundary in_channels included) stays
    within the group's share, with channels rounded and clamped to the
    original widths.
    """
    config, _, _ = _expand(graph, backbone, partition, shares, importance)
    result = ChannelConfig(config)
    apply_channel_config(graph, result)  # re-validate coupling and bounds
    return result


def plan(
    graph: ModelGraph,
    report_provider: ReportProvider,
    request: PlanRequest,
) -> AllocationPlan:
    """Full planning pipeline: backbone, then one expansion pass per round.

    The provider is consulted once per round with the intermediate graph
    (backbone first); a static-stats provider may return the same report
    every time. Deterministic for fixed inputs and seed.
    """
    partition = partition_groups(graph, couple_channels(graph))
    u, backbone_cfg, pool = _solve_backbone(
        graph, request.target_flops, request.lam, request.rounds
    )
    evaluator = _CostEvaluator(graph)
    backbone_flops = evaluator.flops(dict(backbone_cfg.channels))
    rng = np.random.default_rng(request.seed)

    current = dict(backbone_cfg.channels)
    records: list[RoundRecord] = []
    total_surplus = 0
    for round_index in range(request.rounds):
        intermediate = apply_channel_config(graph, ChannelConfig(current))
        try:
            report = report_provider(intermediate)
        except Exception as exc:
            raise PlannerError(
                f"report provider failed in round {round_index}: {exc}"
            ) from exc
        importance = group_importance(report, partition)
        quota = pool.draw()
        shares = _shares_for(request.policy, importance, quota, rng)
        current, multipliers, surplus = _expand(
            graph, ChannelConfig(current), partition, shares, importance, evaluator
        )
        total_surplus += surplus
        records.append(
            RoundRecord(
                policy=request.policy,
                importance=importance.values,
                shares=tuple(shares),
                multipliers=tuple(multipliers),
                surplus=surplus,
            )
        )

    final = ChannelConfig(current)
    achieved = config_cost(graph, final).flops
    if achieved > request.target_flops:
        raise PlannerError(
            f"plan overshoots the budget: {achieved} > {request.target_flops}"
        )
    return AllocationPlan(
        request=request,
        backbone_multiplier=u,
        backbone_flops=backbone_flops,
        pool_total=pool.total,
        pool_quotas=tuple(pool.quotas),
        rounds=tuple(records),
        final_config=final,
        achieved_flops=achieved,
        surplus_flops=total_surplus,
    )


def constant_provider(report: ImportanceReport) -> ReportProvider:
    """Provider that returns one fixed report regardless of the config.

    This is the static-stats mode: multi-round planning then re-splits the
    pool but sees the same importance every round. True re-estimation needs
    a training loop behind the provider.
    """
    return lambda _graph: report


def plan_to_document(result: AllocationPlan) -> dict:
    """Stable-ordered plan document for serialization."""
    return {
        "request": {
            "target_flops": result.request.target_flops,
            "lambda": result.request.lam,
            "policy": result.request.policy,
            "rounds": result.request.rounds,
            "seed": result.request.seed,
        },
        "backbone_multiplier": result.backbone_multiplier,
        "backbone_flops": result.backbone_flops,
        "pool": {
            "total": result.pool_total,
            "round_quotas": list(result.pool_quotas),
            "remaining": 0,
        },
        "rounds": [
            {
                "policy": record.policy,
                "importance": list(record.importance),
                "shares": list(record.shares),
                "multipliers": list(record.multipliers),
                "surplus": record.surplus,
            }
            for record in result.rounds
        ],
        "final_config": dict(result.final_config.channels),
        "achieved_flops": result.achieved_flops,
        "surplus_flops": result.surplus_flops,
    }
