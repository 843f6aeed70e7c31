import json
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pruneplan import (
    CoverageError,
    GroupImportance,
    ImportanceReport,
    SchemaError,
    ShapeError,
    couple_channels,
    graph_from_document,
    group_importance,
    load_stats,
    partition_groups,
    report_from_document,
    report_to_document,
)

from conftest import chain_graph, random_report_scores, random_toy_document
from oracles import exact_group_means


def make_report(graph, scores, criterion="bn_gamma"):
    return report_from_document({"criterion": criterion, "scores": scores}, graph)


class TestLoadStats:
    def test_valid_document(self):
        graph = chain_graph([2, 3])
        report = load_stats(
            json.dumps({"criterion": "bn_gamma", "scores": {"c0": [0.1, 0.2], "c1": [1, 2, 3]}}),
            graph,
        )
        assert report.n_scores == 5
        assert report.scores["c1"] == (1.0, 2.0, 3.0)

    def test_missing_layer_is_a_coverage_error(self):
        graph = chain_graph([2, 3])
        with pytest.raises(CoverageError, match="missing prunable layer 'c1'"):
            make_report(graph, {"c0": [0.1, 0.2]})

    def test_unknown_layer_is_a_coverage_error(self):
        graph = chain_graph([2])
        with pytest.raises(CoverageError, match="'ghost'"):
            make_report(graph, {"c0": [0.1, 0.2], "ghost": [1.0]})

    def test_count_mismatch_is_a_shape_error(self):
        graph = chain_graph([2])
        with pytest.raises(ShapeError, match="3 scores for 2"):
            make_report(graph, {"c0": [0.1, 0.2, 0.3]})

    def test_negative_scores_are_stored_absolute(self):
        graph = chain_graph([2])
        report = make_report(graph, {"c0": [-0.3, 0.1]})
        assert report.scores["c0"] == (0.3, 0.1)

    def test_unknown_criterion_rejected(self):
        graph = chain_graph([1])
        with pytest.raises(SchemaError, match="criterion"):
            make_report(graph, {"c0": [0.5]}, criterion="astrology")

    def test_non_finite_rejected(self):
        graph = chain_graph([1])
        with pytest.raises(SchemaError, match="non-finite"):
            make_report(graph, {"c0": [float("nan")]})

    def test_round_trip(self):
        graph = chain_graph([2, 3])
        report = make_report(graph, {"c0": [0.1, -0.2], "c1": [0.5, 0.6, 0.7]})
        again = report_from_document(report_to_document(report), graph)
        assert again == report


class TestGroupImportance:
    def test_single_group_mean(self):
        graph = chain_graph([2])
        partition = partition_groups(graph, couple_channels(graph))
        report = make_report(graph, {"c0": [0.1, 0.3]})
        assert group_importance(report, partition).values == (0.2,)

    def test_identical_multisets_give_equal_importance(self):
        graph = chain_graph([2, 3, 2, 3], strides=[1, 1, 2, 1])
        partition = partition_groups(graph, couple_channels(graph))
        assert partition.n_groups == 2
        report = make_report(
            graph,
            {"c0": [0.4, 0.1], "c1": [0.2, 0.5, 0.3], "c2": [0.1, 0.4], "c3": [0.3, 0.2, 0.5]},
        )
        t = group_importance(report, partition)
        assert t[0] == pytest.approx(t[1], abs=0)

    @pytest.mark.parametrize("criterion", ["bn_gamma", "filter_norm", "reconstruction_error"])
    def test_all_criteria_flow_through_the_same_aggregation(self, criterion):
        graph = chain_graph([2, 2])
        partition = partition_groups(graph, couple_channels(graph))
        report = make_report(graph, {"c0": [0.1, 0.2], "c1": [0.3, 0.4]}, criterion=criterion)
        assert group_importance(report, partition).values == (0.25,)

    @settings(max_examples=100, deadline=None)
    @given(seed=st.integers(0, 1_000_000))
    def test_matches_flat_mean_oracle(self, seed):
        rng = np.random.default_rng(seed)
        graph = graph_from_document(random_toy_document(rng))
        partition = partition_groups(graph, couple_channels(graph))
        scores = random_report_scores(graph, rng)
        report = make_report(graph, scores)
        got = group_importance(report, partition)
        expected = exact_group_means(report.scores, partition.groups)
        for value, exact in zip(got.values, expected):
            assert value == pytest.approx(float(exact), abs=math.ulp(float(exact)))

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 1_000_000), k=st.sampled_from([0.01, 0.5, 100.0]))
    def test_scale_covariance(self, seed, k):
        rng = np.random.default_rng(seed)
        graph = graph_from_document(random_toy_document(rng))
        partition = partition_groups(graph, couple_channels(graph))
        scores = random_report_scores(graph, rng)
        base = group_importance(make_report(graph, scores), partition)
        scaled = group_importance(
            make_report(graph, {n: [v * k for v in vals] for n, vals in scores.items()}),
            partition,
        )
        for a, b in zip(base.values, scaled.values):
            assert b == pytest.approx(a * k, rel=1e-12)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(0)
        graph = chain_graph([16, 8])
        partition = partition_groups(graph, couple_channels(graph))
        scores = random_report_scores(graph, rng)
        shuffled = {n: list(reversed(v)) for n, v in scores.items()}
        a = group_importance(make_report(graph, scores), partition)
        b = group_importance(make_report(graph, shuffled), partition)
        assert a.values == b.values

    @settings(max_examples=40, deadline=None)
    @given(seed=st.integers(0, 1_000_000))
    def test_importance_bounded_by_group_extremes(self, seed):
        rng = np.random.default_rng(seed)
        graph = graph_from_document(random_toy_document(rng))
        partition = partition_groups(graph, couple_channels(graph))
        report = make_report(graph, random_report_scores(graph, rng))
        t = group_importance(report, partition)
        for members, value in zip(partition.groups, t.values):
            pooled = [v for n in members for v in report.scores[n]]
            assert min(pooled) <= value <= max(pooled)

    def test_report_must_cover_grouped_layers(self):
        graph = chain_graph([2, 3])
        partition = partition_groups(graph, couple_channels(graph))
        report = ImportanceReport("bn_gamma", {"c0": (0.1, 0.2)})
        with pytest.raises(CoverageError, match="'c1'"):
            group_importance(report, partition)


def test_group_importance_type_is_sized():
    t = GroupImportance((0.1, 0.2))
    assert len(t) == 2 and t[1] == 0.2
