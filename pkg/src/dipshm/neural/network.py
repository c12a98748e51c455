"""Declarative model specs and the runtime network built from them.

A ModelSpec is an ordered list of layer descriptions that chains shapes from
the input spectrogram to the class count; build() turns it into a Network of
initialized layers. Weight initialization is He-style Gaussian (variance
2/fan-in) for convolution and dense kernels.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import ShapeError
from . import layers as L

LAYER_KINDS = {"input", "conv", "batchnorm", "relu", "maxpool",
               "dropout", "fullyconnected", "softmax", "output"}


@dataclass(frozen=True)
class LayerSpec:
    kind: str
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in LAYER_KINDS:
            raise ShapeError(f"unknown layer kind '{self.kind}'")


@dataclass(frozen=True)
class ModelSpec:
    layers: tuple
    input_shape: tuple      # (height, width, channels)
    class_count: int

    def __post_init__(self):
        infer_shapes(self)  # raises on inconsistent chaining

    def layer_count(self) -> int:
        return len(self.layers)


def _flat(shape) -> int:
    return int(np.prod(shape))


def infer_shapes(spec: ModelSpec) -> list:
    """Shape after every layer; raises ShapeError when the chain breaks."""
    shape = tuple(spec.input_shape)
    shapes = []
    for ls in spec.layers:
        p = ls.params
        if ls.kind in ("input", "relu", "softmax", "output"):
            pass
        elif ls.kind == "dropout":
            if not 0.0 < p.get("p", 0.5) < 1.0:
                raise ShapeError("dropout probability must lie in (0, 1)")
        elif ls.kind == "conv":
            kh, kw = p["kernel"]
            conv = L.Conv2D(np.zeros((kh, kw, shape[2], p["filters"])),
                            np.zeros(p["filters"]),
                            stride=p.get("stride", (1, 1)),
                            padding=p.get("padding", "same"))
            shape = conv.output_shape(shape)
        elif ls.kind == "batchnorm":
            pass  # shape preserved; channel count implied
        elif ls.kind == "maxpool":
            pool = L.MaxPool(p["pool"], p.get("stride"))
            shape = pool.output_shape(shape)
        elif ls.kind == "fullyconnected":
            shape = (int(p["width"]),)
        shapes.append(shape)
    if shapes and shapes[-1] != (spec.class_count,):
        raise ShapeError(
            f"model ends with shape {shapes[-1]}, expected ({spec.class_count},)"
        )
    return shapes


class Network:
    """Instantiated layer stack with shared forward/backward plumbing."""

    def __init__(self, spec: ModelSpec, layer_objs: list):
        self.spec = spec
        self.layers = layer_objs

    def forward(self, x, train=False, rng=None):
        out = x
        for layer in self.layers:
            out = layer.forward(out, train=train, rng=rng)
        return out

    def backward(self, dy):
        for layer in reversed(self.layers):
            dy = layer.backward(dy)
        return dy

    def predict(self, x):
        """(class indices, probabilities) in inference mode; ties pick the lowest class."""
        probs = self.forward(x, train=False)
        return probs.argmax(axis=-1), probs

    # -- weight I/O ---------------------------------------------------------

    def parameter_items(self):
        """(key, layer, name) triples for every trainable parameter, in order."""
        out = []
        for i, layer in enumerate(self.layers):
            for name in layer.params:
                out.append((f"L{i}.{name}", layer, name))
        return out

    def state_dict(self) -> dict:
        """Trainable parameters plus batchnorm running statistics, copied."""
        state = {}
        for key, layer, name in self.parameter_items():
            state[key] = layer.params[name].copy()
        for i, layer in enumerate(self.layers):
            if isinstance(layer, L.BatchNorm):
                state[f"L{i}.running_mean"] = layer.running_mean.copy()
                state[f"L{i}.running_var"] = layer.running_var.copy()
        return state

    def load_state_dict(self, state: dict):
        for key, layer, name in self.parameter_items():
            arr = layer.params[name]
            arr[...] = state[key].astype(arr.dtype)
        for i, layer in enumerate(self.layers):
            if isinstance(layer, L.BatchNorm):
                layer.running_mean = state[f"L{i}.running_mean"].astype(layer.running_mean.dtype).copy()
                layer.running_var = state[f"L{i}.running_var"].astype(layer.running_var.dtype).copy()


def build(spec: ModelSpec, rng=None, dtype=np.float64) -> Network:
    """Instantiate a spec with freshly initialized weights."""
    if rng is None:
        rng = np.random.default_rng(0)
    shape = tuple(spec.input_shape)
    objs = []
    for ls in spec.layers:
        p = ls.params
        if ls.kind in ("input", "output"):
            objs.append(L.Identity())
        elif ls.kind == "relu":
            objs.append(L.ReLU())
        elif ls.kind == "softmax":
            objs.append(L.Softmax())
        elif ls.kind == "dropout":
            objs.append(L.Dropout(p.get("p", 0.5)))
        elif ls.kind == "conv":
            kh, kw = p["kernel"]
            f = p["filters"]
            fan_in = kh * kw * shape[2]
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(kh, kw, shape[2], f)).astype(dtype)
            layer = L.Conv2D(w, np.zeros(f, dtype=dtype),
                             stride=p.get("stride", (1, 1)),
                             padding=p.get("padding", "same"))
            shape = layer.output_shape(shape)
            objs.append(layer)
        elif ls.kind == "batchnorm":
            c = shape[-1]
            objs.append(L.BatchNorm(np.ones(c, dtype=dtype), np.zeros(c, dtype=dtype)))
        elif ls.kind == "maxpool":
            layer = L.MaxPool(p["pool"], p.get("stride"))
            shape = layer.output_shape(shape)
            objs.append(layer)
        elif ls.kind == "fullyconnected":
            width = int(p["width"])
            fan_in = _flat(shape)
            w = rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(fan_in, width)).astype(dtype)
            objs.append(L.Dense(w, np.zeros(width, dtype=dtype)))
            shape = (width,)
        else:  # pragma: no cover - guarded by LayerSpec
            raise ShapeError(f"unknown layer kind '{ls.kind}'")
    return Network(spec, objs)
