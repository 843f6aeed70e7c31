"""FLOPs and parameter counting.

Convention: one multiply-accumulate is one FLOP, and only conv/linear
weights count — bias, batch-norm and activations are excluded. Under this
convention the shipped reference fixtures land on the familiar published
totals (ResNet-18 1.8G, ResNet-50 4.1G, MobileNetV2 300M at 224x224).
"""

from __future__ import annotations

from dataclasses import dataclass

from .archgraph import ChannelConfig, LayerSpec, ModelGraph, apply_channel_config, scale_uniform


@dataclass(frozen=True)
class ResourceCount:
    flops: int
    params: int

    def __add__(self, other: "ResourceCount") -> "ResourceCount":
        return ResourceCount(self.flops + other.flops, self.params + other.params)


ZERO = ResourceCount(0, 0)


def layer_cost(layer: LayerSpec, out_spatial: tuple[int, int]) -> ResourceCount:
    """Cost of one layer given its output feature-map size."""
    h, w = out_spatial
    if layer.kind == "conv":
        kh, kw = layer.kernel
        weights = kh * kw * layer.in_channels * layer.out_channels
        return ResourceCount(weights * h * w, weights)
    if layer.kind == "depthwise_conv":
        kh, kw = layer.kernel
        weights = kh * kw * layer.out_channels
        return ResourceCount(weights * h * w, weights)
    if layer.kind == "linear":
        weights = layer.in_channels * layer.out_channels
        return ResourceCount(weights, weights)
    return ZERO


def total_cost(graph: ModelGraph) -> ResourceCount:
    """Sum of layer costs over the whole graph."""
    total = ZERO
    for layer in graph.layers:
        total = total + layer_cost(layer, graph.out_spatial(layer.name))
    return total


def config_cost(graph: ModelGraph, config: ChannelConfig) -> ResourceCount:
    return total_cost(apply_channel_config(graph, config))


def uniform_cost(graph: ModelGraph, u: float) -> ResourceCount:
    return config_cost(graph, scale_uniform(graph, u))


def format_flops(flops: int) -> str:
    """Human-readable G/M/K rendering, three significant digits."""
    for unit, scale in (("G", 10**9), ("M", 10**6), ("K", 10**3)):
        if flops >= scale:
            return f"{flops / scale:.3g}{unit}"
    return str(flops)


def parse_flops(text: str) -> int:
    """Parse '1.04e9', '1.04G', '211M' or a plain integer into FLOPs."""
    text = text.strip()
    scale = 1
    if text and text[-1].upper() in "GMK":
        scale = {"G": 10**9, "M": 10**6, "K": 10**3}[text[-1].upper()]
        text = text[:-1]
    try:
        value = float(text)
    except ValueError:
        raise ValueError(f"cannot parse FLOPs value {text!r}") from None
    if value <= 0:
        raise ValueError(f"FLOPs value must be positive, got {text!r}")
    return int(round(value * scale))
