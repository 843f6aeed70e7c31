"""Instantiate a torch model from a model-description document.

Every conv gets a BatchNorm right after it (the per-channel scale of that
BN is what the stats export reads); mid-network linear layers get a
BatchNorm1d for the same reason. ReLU follows each normalized layer except
when the layer feeds an elementwise add directly — there the activation
comes after the add, which is the standard residual arrangement. Convs use
kernel//2 padding, so spatial sizes match the planner's ceil-division
derivation for odd kernels.
"""

from __future__ import annotations

import torch
import torch.nn as nn

from .documents import walk_shapes


class DocumentNet(nn.Module):
    """Executable graph; submodules are keyed by sanitized layer names."""

    def __init__(self, doc):
        super().__init__()
        self.doc = doc
        self.entries = list(doc["layers"])
        self.channels, self.spatial = walk_shapes(doc)
        consumers: dict[str, list[str]] = {}
        for entry in self.entries:
            for pred in entry.get("predecessors", []):
                consumers.setdefault(pred, []).append(entry["kind"])
        self._relu_after = {
            entry["name"]: "add" not in consumers.get(entry["name"], [])
            for entry in self.entries
        }
        self.blocks = nn.ModuleDict()
        self.bn_key_of = {}
        for entry in self.entries:
            name, kind = entry["name"], entry["kind"]
            key = self._key(name)
            if kind == "conv":
                in_ch = self.channels[entry["predecessors"][0]]
                kh, kw = entry["kernel"]
                sh, sw = entry.get("stride", [1, 1])
                self.blocks[key] = nn.Conv2d(
                    in_ch, entry["out_channels"], (kh, kw), (sh, sw),
                    padding=(kh // 2, kw // 2), bias=False,
                )
                self.blocks[key + "__bn"] = nn.BatchNorm2d(entry["out_channels"])
                self.bn_key_of[name] = key + "__bn"
            elif kind == "depthwise_conv":
                width = entry["out_channels"]
                kh, kw = entry["kernel"]
                sh, sw = entry.get("stride", [1, 1])
                self.blocks[key] = nn.Conv2d(
                    width, width, (kh, kw), (sh, sw),
                    padding=(kh // 2, kw // 2), groups=width, bias=False,
                )
                self.blocks[key + "__bn"] = nn.BatchNorm2d(width)
                self.bn_key_of[name] = key + "__bn"
            elif kind == "linear":
                in_ch = self.channels[entry["predecessors"][0]]
                self.blocks[key] = nn.Linear(in_ch, entry["out_channels"])
                if not self._feeds_output(name):
                    # mid-network linear: normalized like a conv so its
                    # per-channel scale shows up in the stats export
                    self.blocks[key + "__bn"] = nn.BatchNorm1d(entry["out_channels"])
                    self.bn_key_of[name] = key + "__bn"
            elif kind == "pool":
                kh, kw = entry.get("kernel", [2, 2])
                sh, sw = entry.get("stride", [1, 1])
                self.blocks[key] = nn.MaxPool2d((kh, kw), (sh, sw), padding=(kh // 2, kw // 2))
            elif kind == "global_pool":
                self.blocks[key] = nn.AdaptiveAvgPool2d(1)

    def _key(self, name):
        return name.replace(".", "/")

    def _feeds_output(self, name):
        for entry in self.entries:
            if entry["kind"] == "output" and name in entry.get("predecessors", []):
                return True
        return False

    def forward(self, x):
        values = {}
        out = x
        for entry in self.entries:
            name, kind = entry["name"], entry["kind"]
            preds = entry.get("predecessors", [])
            if kind == "input":
                values[name] = x
                continue
            if kind == "add":
                out = values[preds[0]]
                for pred in preds[1:]:
                    out = out + values[pred]
                out = torch.relu(out)
            elif kind == "output":
                out = values[preds[0]]
            elif kind == "linear":
                key = self._key(name)
                inp = values[preds[0]]
                if inp.dim() > 2:
                    inp = torch.flatten(inp, 1)
                out = self.blocks[key](inp)
                if name in self.bn_key_of:
                    out = self.blocks[self.bn_key_of[name]](out)
                    if self._relu_after[name]:
                        out = torch.relu(out)
            elif kind in ("conv", "depthwise_conv"):
                key = self._key(name)
                out = self.blocks[key](values[preds[0]])
                out = self.blocks[self.bn_key_of[name]](out)
                if self._relu_after[name]:
                    out = torch.relu(out)
            else:  # pool, global_pool
                out = self.blocks[self._key(name)](values[preds[0]])
            values[name] = out
        return out

    def bn_scales(self):
        """Per-layer absolute BN scale vectors, keyed by document layer name."""
        return {
            name: self.blocks[key].weight.detach().abs().cpu().tolist()
            for name, key in self.bn_key_of.items()
        }

    def all_bn_weights(self):
        """Every BN scale tensor in the network (the sparsity target)."""
        return [
            module.weight
            for module in self.blocks.values()
            if isinstance(module, (nn.BatchNorm2d, nn.BatchNorm1d))
        ]


def build_model(doc) -> DocumentNet:
    return DocumentNet(doc)
