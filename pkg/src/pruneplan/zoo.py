"""Reference architecture descriptions for the shipped fixtures.

Builders emit the same JSON document schema that ``archgraph.parse_model``
consumes; the committed ``fixtures/*.json`` files are their serialized
output (see demos/build_fixtures.py). Channel layouts follow the standard
torchvision definitions at 224x224 input.
"""

from __future__ import annotations

from .archgraph import ModelGraph, graph_from_document, make_document


def _conv(name, out_channels, kernel, stride, pred):
    entry = {
        "name": name,
        "kind": "conv",
        "out_channels": out_channels,
        "kernel": [kernel, kernel],
        "predecessors": [pred],
    }
    if stride != 1:
        entry["stride"] = [stride, stride]
    return entry


def _dwconv(name, channels, stride, pred):
    entry = {
        "name": name,
        "kind": "depthwise_conv",
        "out_channels": channels,
        "kernel": [3, 3],
        "predecessors": [pred],
    }
    if stride != 1:
        entry["stride"] = [stride, stride]
    return entry


def _head(layers, pred, classes=1000):
    layers.append({"name": "global_pool", "kind": "global_pool", "predecessors": [pred]})
    layers.append(
        {"name": "fc", "kind": "linear", "out_channels": classes, "predecessors": ["global_pool"]}
    )
    layers.append({"name": "output", "kind": "output", "predecessors": ["fc"]})


def resnet_document(block_counts: list[int], bottleneck: bool, classes: int = 1000) -> dict:
    """ResNet-18/34 (basic) or ResNet-50/101/152 (bottleneck) description."""
    layers = [{"name": "input", "kind": "input", "predecessors": []}]
    layers.append(_conv("conv1", 64, 7, 2, "input"))
    layers.append(
        {"name": "maxpool", "kind": "pool", "kernel": [3, 3], "stride": [2, 2], "predecessors": ["conv1"]}
    )
    prev = "maxpool"
    prev_channels = 64
    widths = [64, 128, 256, 512]
    expansion = 4 if bottleneck else 1
    for stage, (width, blocks) in enumerate(zip(widths, block_counts), start=1):
        stride = 1 if stage == 1 else 2
        for b in range(blocks):
            tag = f"layer{stage}.{b}"
            block_stride = stride if b == 0 else 1
            out_channels = width * expansion
            if b == 0 and (block_stride != 1 or prev_channels != out_channels):
                layers.append(_conv(f"{tag}.downsample", out_channels, 1, block_stride, prev))
                shortcut = f"{tag}.downsample"
            else:
                shortcut = prev
            if bottleneck:
                layers.append(_conv(f"{tag}.conv1", width, 1, 1, prev))
                layers.append(_conv(f"{tag}.conv2", width, 3, block_stride, f"{tag}.conv1"))
                layers.append(_conv(f"{tag}.conv3", out_channels, 1, 1, f"{tag}.conv2"))
                last = f"{tag}.conv3"
            else:
                layers.append(_conv(f"{tag}.conv1", width, 3, block_stride, prev))
                layers.append(_conv(f"{tag}.conv2", width, 3, 1, f"{tag}.conv1"))
                last = f"{tag}.conv2"
            layers.append({"name": f"{tag}.add", "kind": "add", "predecessors": [shortcut, last]})
            prev = f"{tag}.add"
            prev_channels = out_channels
    _head(layers, prev, classes)
    return make_document([3, 224, 224], layers)


# (expansion factor t, output channels c, repeats n, first stride s)
_MOBILENETV2_STAGES = [
    (1, 16, 1, 1),
    (6, 24, 2, 2),
    (6, 32, 3, 2),
    (6, 64, 4, 2),
    (6, 96, 3, 1),
    (6, 160, 3, 2),
    (6, 320, 1, 1),
]


def mobilenet_v2_document(classes: int = 1000) -> dict:
    layers = [{"name": "input", "kind": "input", "predecessors": []}]
    layers.append(_conv("conv_stem", 32, 3, 2, "input"))
    prev = "conv_stem"
    prev_channels = 32
    index = 0
    for t, c, n, s in _MOBILENETV2_STAGES:
        for b in range(n):
            index += 1
            tag = f"b{index:02d}"
            stride = s if b == 0 else 1
            hidden = prev_channels * t
            block_input = prev
            if t != 1:
                layers.append(_conv(f"{tag}.expand", hidden, 1, 1, prev))
                prev = f"{tag}.expand"
            layers.append(_dwconv(f"{tag}.dw", hidden, stride, prev))
            layers.append(_conv(f"{tag}.project", c, 1, 1, f"{tag}.dw"))
            prev = f"{tag}.project"
            if stride == 1 and prev_channels == c:
                layers.append(
                    {"name": f"{tag}.add", "kind": "add", "predecessors": [block_input, f"{tag}.project"]}
                )
                prev = f"{tag}.add"
            prev_channels = c
    layers.append(_conv("conv_head", 1280, 1, 1, prev))
    _head(layers, "conv_head", classes)
    return make_document([3, 224, 224], layers)


def resnet18() -> ModelGraph:
    return graph_from_document(resnet_document([2, 2, 2, 2], bottleneck=False))


def resnet50() -> ModelGraph:
    return graph_from_document(resnet_document([3, 4, 6, 3], bottleneck=True))


def mobilenet_v2() -> ModelGraph:
    return graph_from_document(mobilenet_v2_document())


BUILDERS = {
    "resnet18": resnet18,
    "resnet50": resnet50,
    "mobilenetv2": mobilenet_v2,
}
