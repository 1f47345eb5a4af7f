"""Minimal float64 backprop engine for small convolutional classifiers."""

from .checkpoint import from_bytes, load_checkpoint, save_checkpoint, to_bytes
from .functional import (
    conv2d,
    dense,
    dropout,
    kaiming_uniform_init,
    maxpool2x2,
    relu,
    softmax_cross_entropy,
)
from .gradcheck import grad_check, gradient_errors
from .layers import Conv2d, Dense, Dropout, Flatten, Layer, MaxPool2x2, ReLU, Sequential
from .model import ModelSpec, build_mnist_cnn, build_model, mnist_cnn_spec
from .tensor import Rng, Tensor

__all__ = [
    "Conv2d", "Dense", "Dropout", "Flatten", "Layer", "MaxPool2x2", "ModelSpec", "ReLU",
    "Rng", "Sequential", "Tensor", "build_mnist_cnn", "build_model", "conv2d", "dense",
    "dropout", "from_bytes", "grad_check", "gradient_errors", "kaiming_uniform_init", "load_checkpoint",
    "maxpool2x2", "mnist_cnn_spec", "relu", "save_checkpoint", "softmax_cross_entropy", "to_bytes",
]
