from .architectures import damage_localization_spec, localization_spec, severity_spec
from .layers import (
    BatchNorm,
    Conv2D,
    Dense,
    Dropout,
    MaxPool,
    ReLU,
    Softmax,
    relu,
    softmax,
)
from .network import LayerSpec, ModelSpec, Network, build, infer_shapes
from .training import (
    TrainConfig,
    TrainResult,
    cross_entropy,
    cross_entropy_grad,
    evaluate_accuracy,
    learning_rate_at,
    sgdm_step,
    train,
)
