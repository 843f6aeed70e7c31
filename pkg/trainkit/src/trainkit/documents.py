"""The planner's document formats, from the consumer side.

trainkit talks to the planner exclusively through its external interfaces:
model-description JSON, importance-stats JSON, plan JSON, and the
``pruneplan`` CLI. This module holds the small amount of document plumbing
that requires — including an independent FLOPs recount used to cross-check
the planner's own numbers.
"""

from __future__ import annotations

import json
import math
import shutil
import subprocess

MODEL_KINDS = {
    "input", "output", "conv", "depthwise_conv", "linear", "pool", "global_pool", "add",
}


def load_document(path):
    with open(path, "r", encoding="utf-8") as handle:
        return json.load(handle)


def save_document(doc, path):
    with open(path, "w", encoding="utf-8") as handle:
        json.dump(doc, handle, indent=2)
        handle.write("\n")


def layer_index(doc):
    return {entry["name"]: entry for entry in doc["layers"]}


def walk_shapes(doc):
    """Channel count and spatial size at every layer output.

    Mirrors the planner's convention: ceil-division strides, linear layers
    collapse to 1x1 and consume channels only.
    """
    c0, h0, w0 = doc["input_shape"]
    channels, spatial = {}, {}
    for entry in doc["layers"]:
        name, kind = entry["name"], entry["kind"]
        preds = entry.get("predecessors", [])
        sh, sw = entry.get("stride", [1, 1])
        if kind == "input":
            channels[name], spatial[name] = c0, (h0, w0)
            continue
        pin = channels[preds[0]]
        ph, pw = spatial[preds[0]]
        if kind in ("conv", "depthwise_conv", "linear"):
            channels[name] = entry["out_channels"]
        else:
            channels[name] = pin
        if kind in ("conv", "depthwise_conv", "pool"):
            spatial[name] = (math.ceil(ph / sh), math.ceil(pw / sw))
        elif kind in ("linear", "global_pool"):
            spatial[name] = (1, 1)
        else:
            spatial[name] = (ph, pw)
    return channels, spatial


def count_flops(doc):
    """Multiply-accumulate count of a model document (conv/linear weights)."""
    channels, spatial = walk_shapes(doc)
    total = 0
    for entry in doc["layers"]:
        kind = entry["kind"]
        if kind not in ("conv", "depthwise_conv", "linear"):
            continue
        name = entry["name"]
        pin = channels[entry["predecessors"][0]]
        out = entry["out_channels"]
        if kind == "linear":
            total += pin * out
        else:
            kh, kw = entry["kernel"]
            h, w = spatial[name]
            contribution = kh * kw * out * h * w
            if kind == "conv":
                contribution *= pin
            total += contribution
    return total


def prunable_layers(doc):
    """Names whose widths a plan may change: conv/linear layers that do not
    feed the output marker."""
    pinned = set()
    for entry in doc["layers"]:
        if entry["kind"] == "output":
            pinned.update(entry.get("predecessors", []))
    return [
        entry["name"]
        for entry in doc["layers"]
        if entry["kind"] in ("conv", "depthwise_conv", "linear") and entry["name"] not in pinned
    ]


def apply_plan_config(doc, final_config):
    """New model document with out_channels rewritten per a plan's config."""
    rewritten = json.loads(json.dumps(doc))
    names = set(prunable_layers(doc))
    unknown = set(final_config) - names
    if unknown:
        raise ValueError(f"plan names unknown or pinned layers: {sorted(unknown)[:3]}")
    for entry in rewritten["layers"]:
        if entry["name"] in final_config:
            entry["out_channels"] = int(final_config[entry["name"]])
    return rewritten


def stats_document(per_layer_scores, criterion="bn_gamma"):
    return {
        "criterion": criterion,
        "scores": {name: [float(v) for v in values] for name, values in per_layer_scores.items()},
    }


class PlannerCli:
    """Thin wrapper over the ``pruneplan`` executable."""

    def __init__(self, executable="pruneplan"):
        resolved = shutil.which(executable)
        if resolved is None:
            raise RuntimeError(
                f"{executable!r} not found on PATH; install the planner package first"
            )
        self.executable = resolved

    def _run(self, *args):
        proc = subprocess.run(
            [self.executable, *args], capture_output=True, text=True
        )
        if proc.returncode != 0:
            raise RuntimeError(
                f"pruneplan {' '.join(args)} failed ({proc.returncode}): {proc.stderr.strip()}"
            )
        return proc.stdout

    def flops(self, model_path):
        out = self._run("flops", str(model_path))
        return int(out.split("flops:")[1].split("(")[0].strip())

    def plan(self, model_path, stats_path, target_flops, lam=0.8,
             policy="importance_guided", rounds=1, seed=0):
        out = self._run(
            "plan", str(model_path),
            "--stats", str(stats_path),
            "--target-flops", str(target_flops),
            "--lambda", str(lam),
            "--policy", policy,
            "--rounds", str(rounds),
            "--seed", str(seed),
        )
        return json.loads(out)
