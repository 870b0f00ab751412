"""From-scratch LSTM autoencoder engine with compiled and NumPy backends."""

from ._backend import backend_name, get_kernels
from .network import (
    TrainedModel,
    forward,
    loss_and_gradients,
    loss_only,
    model_forward,
    reconstruction_errors,
    regularization_loss,
)
from .optimizer import AdamState, adam_step
from .serialization import FORMAT_VERSION, load_model, save_model
from .specs import (
    LossKind,
    LstmLayerSpec,
    ModelKind,
    ModelSpec,
    RegKind,
    Regularization,
    init_weights,
    preset,
    reduced_spec,
    weight_names,
)
from .training import evaluate_loss, gradient_check, train

__all__ = [
    "AdamState",
    "FORMAT_VERSION",
    "LossKind",
    "LstmLayerSpec",
    "ModelKind",
    "ModelSpec",
    "RegKind",
    "Regularization",
    "TrainedModel",
    "adam_step",
    "backend_name",
    "evaluate_loss",
    "forward",
    "get_kernels",
    "gradient_check",
    "init_weights",
    "load_model",
    "loss_and_gradients",
    "loss_only",
    "model_forward",
    "preset",
    "reconstruction_errors",
    "reduced_spec",
    "regularization_loss",
    "save_model",
    "train",
    "weight_names",
]
