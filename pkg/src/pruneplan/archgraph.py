"""In-memory CNN architecture graphs: parsing, validation, channel rewriting.

A model is a JSON document::

    {"input_shape": [c, h, w],
     "layers": [{"name": ..., "kind": ..., "out_channels": ...,
                 "kernel": [kh, kw], "stride": [sh, sw],
                 "predecessors": [...]}, ...]}

Layers must appear in topological order (the parser verifies, it does not
sort). Spatial sizes are derived, never stored: every strided layer halves
(or generally divides) its input by ``ceil(in / stride)``, which is the
"same"-padding convention and reproduces the reference torchvision shapes
for odd kernels. Linear layers consume channels only and collapse spatial
extent to 1x1.

Batch-norm and activation layers are not represented; per-channel statistics
for the implied BN after each conv arrive separately through importance
reports. A conv/linear layer that directly feeds an ``output`` layer keeps
its out_channels fixed (it produces class scores) and is therefore excluded
from the prunable set.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping

from .errors import BoundError, ConstraintError, GraphError, SchemaError

CONV_KINDS = frozenset({"conv", "depthwise_conv"})
PRUNABLE_KINDS = frozenset({"conv", "depthwise_conv", "linear"})
CHANNEL_PRESERVING_KINDS = frozenset({"pool", "global_pool", "output"})
ALL_KINDS = PRUNABLE_KINDS | CHANNEL_PRESERVING_KINDS | {"add", "input"}

_LAYER_FIELDS = {"name", "kind", "out_channels", "kernel", "stride", "predecessors"}


def round_half_up(x: float) -> int:
    """Round half away from zero, for non-negative x."""
    return int(math.floor(x + 0.5))


@dataclass(frozen=True)
class LayerSpec:
    name: str
    kind: str
    out_channels: int
    in_channels: int = 0
    kernel: tuple[int, int] | None = None
    stride: tuple[int, int] = (1, 1)
    predecessors: tuple[str, ...] = ()


@dataclass(frozen=True)
class ModelGraph:
    """Validated, immutable architecture graph in topological order."""

    layers: tuple[LayerSpec, ...]
    input_shape: tuple[int, int, int]
    spatial: Mapping[str, tuple[int, int]] = field(compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_index", {l.name: l for l in self.layers})

    def layer(self, name: str) -> LayerSpec:
        return self._index[name]

    def out_spatial(self, name: str) -> tuple[int, int]:
        return self.spatial[name]

    @property
    def prunable_layers(self) -> tuple[str, ...]:
        """Names of layers whose out_channels may change, topo order."""
        pinned = set()
        for layer in self.layers:
            if layer.kind == "output":
                pinned.update(layer.predecessors)
        return tuple(
            l.name
            for l in self.layers
            if l.kind in PRUNABLE_KINDS and l.name not in pinned
        )

    @property
    def n_prunable(self) -> int:
        return len(self.prunable_layers)


@dataclass(frozen=True)
class ChannelConfig:
    """Out-channel assignment for exactly the prunable layers of one graph."""

    channels: Mapping[str, int]

    def __getitem__(self, name: str) -> int:
        return self.channels[name]

    def __iter__(self):
        return iter(self.channels)

    def items(self):
        return self.channels.items()

    def __eq__(self, other):
        if not isinstance(other, ChannelConfig):
            return NotImplemented
        return dict(self.channels) == dict(other.channels)


def _expect_pair(value, layer_name: str, field_name: str) -> tuple[int, int]:
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in value)
    ):
        raise SchemaError(
            f"layer {layer_name!r}: field {field_name!r} must be a pair of positive integers"
        )
    return (value[0], value[1])


def _parse_layer_entry(entry, position: int) -> LayerSpec:
    if not isinstance(entry, dict):
        raise SchemaError(f"layers[{position}] must be an object")
    unknown = set(entry) - _LAYER_FIELDS
    if unknown:
        raise SchemaError(f"layers[{position}]: unknown field {sorted(unknown)[0]!r}")
    name = entry.get("name")
    if not isinstance(name, str) or not name:
        raise SchemaError(f"layers[{position}]: field 'name' must be a non-empty string")
    kind = entry.get("kind")
    if kind not in ALL_KINDS:
        raise SchemaError(f"layer {name!r}: field 'kind' must be one of {sorted(ALL_KINDS)}")

    preds = entry.get("predecessors", [])
    if not isinstance(preds, list) or not all(isinstance(p, str) for p in preds):
        raise SchemaError(f"layer {name!r}: field 'predecessors' must be a list of names")

    out_channels = entry.get("out_channels")
    if kind in PRUNABLE_KINDS:
        if not isinstance(out_channels, int) or isinstance(out_channels, bool) or out_channels <= 0:
            raise SchemaError(f"layer {name!r}: field 'out_channels' must be a positive integer")
    elif out_channels is not None:
        raise SchemaError(f"layer {name!r}: field 'out_channels' is derived for kind {kind!r}")

    kernel = entry.get("kernel")
    if kind in CONV_KINDS:
        if kernel is None:
            raise SchemaError(f"layer {name!r}: field 'kernel' is required for kind {kind!r}")
        kernel = _expect_pair(kernel, name, "kernel")
    elif kind == "pool":
        kernel = _expect_pair(kernel, name, "kernel") if kernel is not None else None
    elif kernel is not None:
        raise SchemaError(f"layer {name!r}: field 'kernel' not allowed for kind {kind!r}")

    stride = entry.get("stride")
    if kind in CONV_KINDS or kind == "pool":
        stride = _expect_pair(stride, name, "stride") if stride is not None else (1, 1)
    elif stride is not None:
        raise SchemaError(f"layer {name!r}: field 'stride' not allowed for kind {kind!r}")
    else:
        stride = (1, 1)

    return LayerSpec(
        name=name,
        kind=kind,
        out_channels=out_channels if out_channels is not None else 0,
        kernel=kernel,
        stride=stride,
        predecessors=tuple(preds),
    )


def _derive(layers: list[LayerSpec], input_shape: tuple[int, int, int]) -> ModelGraph:
    """Propagate channels and spatial sizes; validate wiring constraints."""
    c_in, h_in, w_in = input_shape
    resolved: dict[str, LayerSpec] = {}
    spatial: dict[str, tuple[int, int]] = {}
    order: list[LayerSpec] = []

    inputs = [l for l in layers if l.kind == "input"]
    if len(inputs) != 1:
        raise GraphError(f"expected exactly one input layer, found {len(inputs)}")

    for layer in layers:
        if layer.name in resolved:
            raise GraphError(f"duplicate layer name {layer.name!r}")
        for p in layer.predecessors:
            if p == layer.name:
                raise GraphError(f"layer {layer.name!r} forms a cycle with itself")
            if p not in resolved:
                # Either a forward reference (cycle / out-of-order) or unknown.
                known_later = any(l.name == p for l in layers)
                if known_later:
                    raise GraphError(
                        f"layer {layer.name!r} precedes its predecessor {p!r}: "
                        "layers must be listed in topological order"
                    )
                raise GraphError(f"layer {layer.name!r} has dangling predecessor {p!r}")

        if layer.kind == "input":
            if layer.predecessors:
                raise GraphError(f"input layer {layer.name!r} must have no predecessors")
            out = replace(layer, in_channels=c_in, out_channels=c_in)
            spatial[layer.name] = (h_in, w_in)
        elif layer.kind == "add":
            if len(layer.predecessors) < 2:
                raise GraphError(f"add layer {layer.name!r} needs at least 2 predecessors")
            pred_specs = [resolved[p] for p in layer.predecessors]
            channels = {p.out_channels for p in pred_specs}
            if len(channels) != 1:
                raise GraphError(
                    f"add layer {layer.name!r}: predecessors have unequal out_channels "
                    f"{sorted(channels)}"
                )
            sizes = {spatial[p] for p in layer.predecessors}
            if len(sizes) != 1:
                raise GraphError(
                    f"add layer {layer.name!r}: predecessors have unequal spatial sizes "
                    f"{sorted(sizes)}"
                )
            common = channels.pop()
            out = replace(layer, in_channels=common, out_channels=common)
            spatial[layer.name] = sizes.pop()
        else:
            if len(layer.predecessors) != 1:
                raise GraphError(
                    f"layer {layer.name!r} of kind {layer.kind!r} needs exactly 1 predecessor"
                )
            pred = resolved[layer.predecessors[0]]
            ph, pw = spatial[pred.name]
            in_ch = pred.out_channels
            if layer.kind == "linear":
                out = replace(layer, in_channels=in_ch)
                spatial[layer.name] = (1, 1)
            elif layer.kind == "global_pool":
                out = replace(layer, in_channels=in_ch, out_channels=in_ch)
                spatial[layer.name] = (1, 1)
            elif layer.kind in ("pool", "output"):
                out = replace(layer, in_channels=in_ch, out_channels=in_ch)
                sh, sw = layer.stride
                spatial[layer.name] = (-(-ph // sh), -(-pw // sw))
            else:  # conv, depthwise_conv
                if layer.kind == "depthwise_conv" and layer.out_channels != in_ch:
                    raise GraphError(
                        f"depthwise layer {layer.name!r}: out_channels "
                        f"{layer.out_channels} != in_channels {in_ch}"
                    )
                out = replace(layer, in_channels=in_ch)
                sh, sw = layer.stride
                spatial[layer.name] = (-(-ph // sh), -(-pw // sw))
            if spatial[layer.name][0] <= 0 or spatial[layer.name][1] <= 0:
                raise GraphError(f"layer {layer.name!r}: non-positive spatial size")

        resolved[layer.name] = out
        order.append(out)

    return ModelGraph(layers=tuple(order), input_shape=input_shape, spatial=spatial)


def graph_from_document(doc: dict) -> ModelGraph:
    """Build a validated ModelGraph from a parsed model-description dict."""
    if not isinstance(doc, dict):
        raise SchemaError("model description must be a JSON object")
    unknown = set(doc) - {"input_shape", "layers"}
    if unknown:
        raise SchemaError(f"unknown top-level field {sorted(unknown)[0]!r}")
    shape = doc.get("input_shape")
    if (
        not isinstance(shape, list)
        or len(shape) != 3
        or not all(isinstance(v, int) and not isinstance(v, bool) and v > 0 for v in shape)
    ):
        raise SchemaError("field 'input_shape' must be [channels, height, width] of positive integers")
    entries = doc.get("layers")
    if not isinstance(entries, list) or not entries:
        raise SchemaError("field 'layers' must be a non-empty list")
    layers = [_parse_layer_entry(e, i) for i, e in enumerate(entries)]
    return _derive(layers, (shape[0], shape[1], shape[2]))


def parse_model(text: str) -> ModelGraph:
    """Parse a model-description JSON document into a validated graph."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"invalid JSON: {exc}") from None
    return graph_from_document(doc)


def graph_to_document(graph: ModelGraph) -> dict:
    """Inverse of parse_model: emit the canonical description document."""
    entries = []
    for layer in graph.layers:
        entry: dict = {"name": layer.name, "kind": layer.kind}
        if layer.kind in PRUNABLE_KINDS:
            entry["out_channels"] = layer.out_channels
        if layer.kind in CONV_KINDS:
            entry["kernel"] = list(layer.kernel)
        elif layer.kind == "pool" and layer.kernel is not None:
            entry["kernel"] = list(layer.kernel)
        if (layer.kind in CONV_KINDS or layer.kind == "pool") and layer.stride != (1, 1):
            entry["stride"] = list(layer.stride)
        entry["predecessors"] = list(layer.predecessors)
        entries.append(entry)
    return {"input_shape": list(graph.input_shape), "layers": entries}


def serialize_model(graph: ModelGraph) -> str:
    return json.dumps(graph_to_document(graph), indent=2) + "\n"


def channel_sources(graph: ModelGraph, name: str) -> tuple[str, ...]:
    """Layers whose out_channels define the channel count flowing out of `name`.

    Walks back through channel-preserving layers (pool, global_pool, output)
    and fans out through adds. Sources are conv/depthwise/linear layers, or
    the input layer when a path reaches the raw network input.
    """
    layer = graph.layer(name)
    if layer.kind in PRUNABLE_KINDS or layer.kind == "input":
        return (name,)
    found: list[str] = []
    for pred in layer.predecessors:
        for src in channel_sources(graph, pred):
            if src not in found:
                found.append(src)
    return tuple(found)


def coupling_pairs(graph: ModelGraph) -> list[tuple[str, str]]:
    """Pairs of layers whose out_channels must stay equal after pruning.

    One pair per elementary constraint: adds tie the sources of all their
    inputs together, depthwise convs tie themselves to their producer. The
    transitive closure of these pairs gives the coupling classes.
    """
    pairs: list[tuple[str, str]] = []
    for layer in graph.layers:
        if layer.kind == "add":
            sources: list[str] = []
            for pred in layer.predecessors:
                for src in channel_sources(graph, pred):
                    if src not in sources:
                        sources.append(src)
            for other in sources[1:]:
                pairs.append((sources[0], other))
        elif layer.kind == "depthwise_conv":
            for src in channel_sources(graph, layer.predecessors[0]):
                pairs.append((layer.name, src))
    for a, b in pairs:
        if graph.layer(a).kind == "input" or graph.layer(b).kind == "input":
            raise GraphError(
                f"coupling ties layer {b if graph.layer(a).kind == 'input' else a!r} "
                "to the network input, which cannot be pruned"
            )
    return pairs


def apply_channel_config(graph: ModelGraph, config: ChannelConfig) -> ModelGraph:
    """Return a new graph with out_channels replaced per config.

    in_channels are re-propagated through the whole graph; the input graph is
    untouched. The config must cover exactly the prunable layers, respect the
    original channel counts as upper bounds, and keep coupled layers equal.
    """
    prunable = set(graph.prunable_layers)
    extra = set(config) - prunable
    if extra:
        raise ConstraintError(f"config names non-prunable or unknown layer {sorted(extra)[0]!r}")
    missing = prunable - set(config)
    if missing:
        raise ConstraintError(f"config is missing prunable layer {sorted(missing)[0]!r}")

    def value_of(name: str) -> int:
        return config[name] if name in prunable else graph.layer(name).out_channels

    for a, b in coupling_pairs(graph):
        if value_of(a) != value_of(b):
            raise ConstraintError(
                f"coupled layers {a!r} and {b!r} must keep equal channels, "
                f"got {value_of(a)} != {value_of(b)}"
            )

    new_layers = []
    for layer in graph.layers:
        if layer.name in prunable:
            value = config[layer.name]
            if not isinstance(value, int) or value < 1:
                raise ConstraintError(f"layer {layer.name!r}: channel count must be a positive integer")
            if value > layer.out_channels:
                raise BoundError(
                    f"layer {layer.name!r}: {value} channels exceeds original {layer.out_channels}"
                )
            new_layers.append(replace(layer, out_channels=value))
        else:
            new_layers.append(layer)
    try:
        return _derive(new_layers, graph.input_shape)
    except GraphError as exc:
        # Residual coupling violations not caught above surface here.
        raise ConstraintError(str(exc)) from None


def scale_uniform(graph: ModelGraph, u: float) -> ChannelConfig:
    """Uniform width multiplier: every prunable layer gets round(u * C_i), min 1."""
    if not (0.0 < u <= 1.0):
        raise ValueError(f"uniform multiplier must be in (0, 1], got {u}")
    channels = {
        name: max(1, round_half_up(u * graph.layer(name).out_channels))
        for name in graph.prunable_layers
    }
    return ChannelConfig(channels)


def identity_config(graph: ModelGraph) -> ChannelConfig:
    return ChannelConfig({name: graph.layer(name).out_channels for name in graph.prunable_layers})


def make_document(input_shape: Iterable[int], layers: list[dict]) -> dict:
    """Convenience for building description documents in code."""
    return {"input_shape": list(input_shape), "layers": layers}
