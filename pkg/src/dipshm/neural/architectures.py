"""Classifier architectures for story localization and severity grading.

Layer inventories are fixed per task (22 layers for deterioration
localization, 19 for severity grading, 20 for damage localization, counting
the input and the classification-output stages); kernel sizes, filter
counts, and dense widths are tunable defaults. Pooling is deliberately
asymmetric, reducing the long time axis four times faster than the
frequency axis.
"""

from __future__ import annotations

from .network import LayerSpec, ModelSpec

CONV_FILTERS = (8, 16, 32)
CONV_KERNELS = ((5, 5), (3, 3), (3, 3))
POOL = (2, 4)
DROPOUT_P = 0.5


def _conv_block(filters, kernel):
    return [
        LayerSpec("conv", {"kernel": kernel, "filters": filters,
                           "stride": (1, 1), "padding": "same"}),
        LayerSpec("batchnorm"),
        LayerSpec("relu"),
        LayerSpec("maxpool", {"pool": POOL}),
    ]


def _trunk():
    out = []
    for f, k in zip(CONV_FILTERS, CONV_KERNELS):
        out += _conv_block(f, k)
    return out


def localization_spec(input_shape, class_count=4) -> ModelSpec:
    """22-layer deterioration-localization model (5 relu, 3 dense, 2 dropout)."""
    layers = (
        [LayerSpec("input")]
        + _trunk()
        + [
            LayerSpec("dropout", {"p": DROPOUT_P}),
            LayerSpec("fullyconnected", {"width": 128}),
            LayerSpec("relu"),
            LayerSpec("dropout", {"p": DROPOUT_P}),
            LayerSpec("fullyconnected", {"width": 64}),
            LayerSpec("relu"),
            LayerSpec("fullyconnected", {"width": class_count}),
            LayerSpec("softmax"),
            LayerSpec("output"),
        ]
    )
    return ModelSpec(tuple(layers), tuple(input_shape), class_count)


def severity_spec(input_shape, class_count) -> ModelSpec:
    """19-layer severity model (4 relu, 2 dense, 1 dropout)."""
    layers = (
        [LayerSpec("input")]
        + _trunk()
        + [
            LayerSpec("dropout", {"p": DROPOUT_P}),
            LayerSpec("fullyconnected", {"width": 64}),
            LayerSpec("relu"),
            LayerSpec("fullyconnected", {"width": class_count}),
            LayerSpec("softmax"),
            LayerSpec("output"),
        ]
    )
    return ModelSpec(tuple(layers), tuple(input_shape), class_count)


def damage_localization_spec(input_shape, class_count=4) -> ModelSpec:
    """20-layer damage-localization model (4 relu, 2 dense, 2 dropout)."""
    layers = (
        [LayerSpec("input")]
        + _trunk()
        + [
            LayerSpec("dropout", {"p": DROPOUT_P}),
            LayerSpec("fullyconnected", {"width": 128}),
            LayerSpec("relu"),
            LayerSpec("dropout", {"p": DROPOUT_P}),
            LayerSpec("fullyconnected", {"width": class_count}),
            LayerSpec("softmax"),
            LayerSpec("output"),
        ]
    )
    return ModelSpec(tuple(layers), tuple(input_shape), class_count)
