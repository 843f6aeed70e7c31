import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pruneplan import (
    LayerSpec,
    apply_channel_config,
    config_cost,
    format_flops,
    graph_from_document,
    graph_to_document,
    layer_cost,
    parse_flops,
    parse_model,
    scale_uniform,
    total_cost,
)

from conftest import chain_graph, random_toy_document
from oracles import recount_flops


class TestLayerCost:
    def test_conv_formula(self):
        layer = LayerSpec("c", "conv", out_channels=16, in_channels=3, kernel=(3, 3))
        cost = layer_cost(layer, (32, 32))
        assert cost.flops == 3 * 3 * 3 * 16 * 32 * 32 == 442_368
        assert cost.params == 3 * 3 * 3 * 16

    def test_add_is_free(self):
        layer = LayerSpec("a", "add", out_channels=64, in_channels=64)
        assert layer_cost(layer, (7, 7)).flops == 0

    def test_linear_formula(self):
        layer = LayerSpec("fc", "linear", out_channels=1000, in_channels=512)
        assert layer_cost(layer, (1, 1)).flops == 512_000

    def test_depthwise_formula(self):
        layer = LayerSpec("dw", "depthwise_conv", out_channels=32, in_channels=32, kernel=(3, 3))
        assert layer_cost(layer, (56, 56)).flops == 9 * 32 * 56 * 56


class TestFixtureTotals:
    """Anchors for the counting convention on the reference models."""

    @pytest.mark.parametrize(
        "fixture, expected",
        [("resnet18", 1.8e9), ("resnet50", 4.1e9), ("mobilenetv2", 300e6)],
    )
    def test_full_model_flops(self, fixtures_dir, fixture, expected):
        graph = parse_model((fixtures_dir / f"{fixture}.json").read_text())
        flops = total_cost(graph).flops
        assert flops == pytest.approx(expected, rel=0.03)

    @pytest.mark.parametrize(
        "fixture, u, expected, rel",
        [
            ("resnet18", 0.85, 1.33e9, 0.04),
            ("resnet18", 0.75, 1.05e9, 0.04),
            ("resnet50", 0.85, 3.0e9, 0.05),
            ("resnet50", 0.75, 2.3e9, 0.05),
            ("resnet50", 0.5, 1.1e9, 0.05),
        ],
    )
    def test_uniformly_scaled_flops(self, fixtures_dir, fixture, u, expected, rel):
        graph = parse_model((fixtures_dir / f"{fixture}.json").read_text())
        flops = config_cost(graph, scale_uniform(graph, u)).flops
        assert flops == pytest.approx(expected, rel=rel)

    def test_fixture_totals_match_independent_recount(self, fixtures_dir):
        for name in ("resnet18", "resnet50", "mobilenetv2"):
            graph = parse_model((fixtures_dir / f"{name}.json").read_text())
            assert total_cost(graph).flops == recount_flops(graph_to_document(graph))


class TestProperties:
    def test_additivity(self):
        graph = chain_graph([8, 16, 24], head=True)
        per_layer = sum(
            layer_cost(l, graph.out_spatial(l.name)).flops for l in graph.layers
        )
        assert total_cost(graph).flops == per_layer

    @settings(max_examples=50, deadline=None)
    @given(seed=st.integers(0, 10_000))
    def test_agrees_with_recount_on_random_toys(self, seed):
        doc = random_toy_document(np.random.default_rng(seed))
        assert total_cost(graph_from_document(doc)).flops == recount_flops(doc)

    @settings(max_examples=30, deadline=None)
    @given(seed=st.integers(0, 10_000), data=st.data())
    def test_monotone_in_any_single_width(self, seed, data):
        graph = graph_from_document(random_toy_document(np.random.default_rng(seed)))
        base = {n: graph.layer(n).out_channels for n in graph.prunable_layers}
        target = data.draw(st.sampled_from(sorted(base)))
        if base[target] == 1:
            return
        shrunk = dict(base)
        # shrink the whole coupling class so the config stays valid
        from pruneplan import couple_channels

        for member in next(
            cls for cls in couple_channels(graph).classes if target in cls
        ):
            shrunk[member] = base[member] - 1
        from pruneplan import ChannelConfig

        low = config_cost(graph, ChannelConfig(shrunk)).flops
        high = config_cost(graph, ChannelConfig(base)).flops
        assert low < high

    def test_quadratic_scaling_on_conv_chain(self):
        # interior convs see both ends scale, so their flops shrink ~u^2;
        # the first conv scales linearly because the image depth is fixed
        graph = chain_graph([64, 64, 64, 64], input_shape=(64, 16, 16))

        def interior(g):
            return sum(
                layer_cost(l, g.out_spatial(l.name)).flops for l in g.layers[2:]
            )

        full = interior(graph)
        for u in (0.5, 0.25, 0.3):
            pruned = apply_channel_config(graph, scale_uniform(graph, u))
            assert total_cost(pruned).flops == recount_flops(graph_to_document(pruned))
            realized = pruned.layer("c0").out_channels / 64
            # exact against the realized (rounded) channel ratio ...
            assert interior(pruned) == pytest.approx(full * realized**2, abs=1)
            # ... and approximately u^2, up to rounding slack
            assert interior(pruned) / full == pytest.approx(u * u, rel=0.1)


class TestUnits:
    def test_format(self):
        assert format_flops(1_814_073_344) == "1.81G"
        assert format_flops(300_774_272) == "301M"
        assert format_flops(512) == "512"

    @pytest.mark.parametrize(
        "text, expected",
        [("1.04G", 1_040_000_000), ("211M", 211_000_000), ("1.04e9", 1_040_000_000), ("97000", 97_000)],
    )
    def test_parse(self, text, expected):
        assert parse_flops(text) == expected

    @pytest.mark.parametrize("bad", ["", "x", "-3G", "0"])
    def test_parse_rejects(self, bad):
        with pytest.raises(ValueError):
            parse_flops(bad)
