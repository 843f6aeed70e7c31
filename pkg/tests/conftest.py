import pathlib

import numpy as np
import pytest

from pruneplan import graph_from_document, make_document

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


@pytest.fixture(scope="session")
def fixtures_dir():
    return FIXTURES


def conv(name, out_channels, pred, kernel=3, stride=1):
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


def chain_document(channels, input_shape=(3, 16, 16), strides=None, head=False):
    """Plain conv chain, optionally with per-layer strides and a linear head."""
    strides = strides or [1] * len(channels)
    layers = [{"name": "input", "kind": "input", "predecessors": []}]
    prev = "input"
    for i, (c, s) in enumerate(zip(channels, strides)):
        layers.append(conv(f"c{i}", c, prev, stride=s))
        prev = f"c{i}"
    if head:
        layers.append({"name": "gap", "kind": "global_pool", "predecessors": [prev]})
        layers.append({"name": "fc", "kind": "linear", "out_channels": 10, "predecessors": ["gap"]})
        layers.append({"name": "output", "kind": "output", "predecessors": ["fc"]})
    return make_document(input_shape, layers)


def chain_graph(channels, **kwargs):
    return graph_from_document(chain_document(channels, **kwargs))


def residual_block_document(d2=8, d3=12, d4=8, input_shape=(4, 16, 16)):
    """Three convs where the first and third feed an elementwise add."""
    layers = [
        {"name": "input", "kind": "input", "predecessors": []},
        conv("layer1", d2, "input"),
        conv("layer2", d3, "layer1"),
        conv("layer3", d4, "layer2"),
        {"name": "add", "kind": "add", "predecessors": ["layer1", "layer3"]},
    ]
    return make_document(input_shape, layers)


def residual_tower_document(blocks=2, width=8, input_shape=(3, 16, 16)):
    """Stem conv plus identity residual blocks chained on one trunk."""
    layers = [
        {"name": "input", "kind": "input", "predecessors": []},
        conv("stem", width, "input"),
    ]
    prev = "stem"
    for b in range(1, blocks + 1):
        layers.append(conv(f"block{b}.conv1", width + 4, prev))
        layers.append(conv(f"block{b}.conv2", width, f"block{b}.conv1"))
        layers.append({"name": f"block{b}.add", "kind": "add", "predecessors": [prev, f"block{b}.conv2"]})
        prev = f"block{b}.add"
    return make_document(input_shape, layers)


def random_toy_document(rng: np.random.Generator):
    """Random valid toy net: <= 6 prunable convs, channels <= 32,
    optionally one identity residual block and one stride-2 conv."""
    in_ch = int(rng.integers(1, 4))
    hw = int(rng.choice([8, 12, 16]))
    layers = [{"name": "input", "kind": "input", "predecessors": []}]
    prev = "input"
    budget = int(rng.integers(2, 7))

    width = int(rng.integers(2, 33))
    layers.append(conv("c0", width, prev))
    prev, used = "c0", 1

    if budget - used >= 2 and rng.random() < 0.6:
        mid = int(rng.integers(2, 33))
        layers.append(conv("b.conv1", mid, prev))
        layers.append(conv("b.conv2", width, "b.conv1"))
        layers.append({"name": "b.add", "kind": "add", "predecessors": [prev, "b.conv2"]})
        prev, used = "b.add", used + 2

    strided = rng.random() < 0.5
    for i in range(budget - used):
        c = int(rng.integers(2, 33))
        stride = 2 if (strided and i == 0) else 1
        layers.append(conv(f"t{i}", c, prev, stride=stride))
        prev = f"t{i}"
    return make_document([in_ch, hw, hw], layers)


def random_report_scores(graph, rng: np.random.Generator, scale=1.0):
    return {
        name: [float(v) for v in np.abs(rng.normal(0.3, 0.2, graph.layer(name).out_channels)) * scale]
        for name in graph.prunable_layers
    }
