"""Regenerate the shipped fixtures.

Writes the three reference model descriptions plus one synthetic
importance-stats file per model into fixtures/. The stats mimic what a
sparsity-regularized training run exports: per-channel absolute batch-norm
scales, a chunk of them squashed toward zero, with slightly richer values in
early layers. Everything is seeded, so reruns are byte-identical.
"""

import json
import pathlib

import numpy as np

from pruneplan import serialize_model, zoo

FIXTURES = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def synthetic_bn_stats(graph, seed):
    rng = np.random.default_rng(seed)
    names = graph.prunable_layers
    scores = {}
    for position, name in enumerate(names):
        width = graph.layer(name).out_channels
        depth_factor = 1.25 - 0.5 * position / max(1, len(names) - 1)
        values = np.abs(rng.normal(0.4, 0.25, width)) * depth_factor
        squashed = rng.random(width) < 0.3
        values[squashed] = rng.uniform(0.0, 0.02, squashed.sum())
        scores[name] = [round(float(v), 6) for v in values]
    return {"criterion": "bn_gamma", "scores": scores}


def main():
    FIXTURES.mkdir(exist_ok=True)
    for seed, (name, builder) in enumerate(zoo.BUILDERS.items(), start=101):
        graph = builder()
        model_path = FIXTURES / f"{name}.json"
        model_path.write_text(serialize_model(graph))
        stats_path = FIXTURES / f"{name}.stats.json"
        stats_path.write_text(json.dumps(synthetic_bn_stats(graph, seed), indent=2) + "\n")
        print(f"{model_path.name}: {len(graph.layers)} layers, {graph.n_prunable} prunable")
        print(f"{stats_path.name}: seeded bn_gamma scores")


if __name__ == "__main__":
    main()
