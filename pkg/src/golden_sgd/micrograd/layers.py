from __future__ import annotations

import numpy as np

from . import functional as F
from .tensor import Tensor


class Layer:
    """Base class: ``forward`` caches what ``backward`` needs."""

    def __init__(self, name=""):
        self.name = name
        self._cache = None

    def params(self):
        return {}

    def forward(self, x, training=False):
        raise NotImplementedError

    def backward(self, dout, need_dx=True):
        raise NotImplementedError

    def __call__(self, x, training=False):
        return self.forward(x, training)


class Conv2d(Layer):
    def __init__(self, in_channels, out_channels, rng, kernel=3, stride=1, padding=1, name="conv"):
        super().__init__(name)
        fan_in = in_channels * kernel * kernel
        self.weight = F.kaiming_uniform_init(rng, fan_in, (out_channels, in_channels, kernel, kernel))
        self.bias = Tensor.zeros(out_channels)
        self.stride = stride
        self.padding = padding

    def params(self):
        return {f"{self.name}.weight": self.weight, f"{self.name}.bias": self.bias}

    def forward(self, x, training=False):
        out, self._cache = F.conv2d_forward(x, self.weight.data, self.bias.data,
                                            self.stride, self.padding)
        return out

    def backward(self, dout, need_dx=True):
        dx, dw, db = F.conv2d_backward(dout, self._cache, need_dx)
        self.weight.grad += dw
        self.bias.grad += db
        return dx


class Dense(Layer):
    def __init__(self, in_features, out_features, rng, name="fc"):
        super().__init__(name)
        self.weight = F.kaiming_uniform_init(rng, in_features, (in_features, out_features))
        self.bias = Tensor.zeros(out_features)

    def params(self):
        return {f"{self.name}.weight": self.weight, f"{self.name}.bias": self.bias}

    def forward(self, x, training=False):
        out, self._cache = F.dense_forward(x, self.weight.data, self.bias.data)
        return out

    def backward(self, dout, need_dx=True):
        dx, dw, db = F.dense_backward(dout, self._cache)
        self.weight.grad += dw
        self.bias.grad += db
        return dx


class ReLU(Layer):
    def forward(self, x, training=False):
        out, self._cache = F.relu_forward(x)
        return out

    def backward(self, dout, need_dx=True):
        return F.relu_backward(dout, self._cache)


class MaxPool2x2(Layer):
    def forward(self, x, training=False):
        out, self._cache = F.maxpool2x2_forward(x)
        return out

    def backward(self, dout, need_dx=True):
        return F.maxpool2x2_backward(dout, self._cache)


class Flatten(Layer):
    def forward(self, x, training=False):
        self._cache = x.shape
        return x.reshape(x.shape[0], -1)

    def backward(self, dout, need_dx=True):
        return dout.reshape(self._cache)


class Dropout(Layer):
    def __init__(self, rate=0.25, rng=None, name="dropout"):
        super().__init__(name)
        self.rate = rate
        self.rng = rng

    def forward(self, x, training=False):
        out, self._cache = F.dropout_forward(x, self.rate, self.rng, training)
        return out

    def backward(self, dout, need_dx=True):
        return F.dropout_backward(dout, self._cache)


class Sequential:
    """A feed-forward stack of layers ending in softmax cross-entropy."""

    def __init__(self, layers, spec=None):
        self.layers = list(layers)
        self.spec = spec
        self._loss_cache = None

    def params(self):
        out = {}
        for layer in self.layers:
            out.update(layer.params())
        return out

    def num_params(self):
        return sum(t.size for t in self.params().values())

    def zero_grad(self):
        for t in self.params().values():
            t.zero_grad()

    def set_rng(self, rng):
        """Give every dropout layer its own child stream of ``rng``."""
        for i, layer in enumerate(self.layers):
            if isinstance(layer, Dropout):
                layer.rng = rng.child(i)

    def forward(self, x, training=False):
        for layer in self.layers:
            x = layer.forward(x, training)
        return x

    __call__ = forward

    def backward(self, dout, need_dx=True):
        first = self.layers[0]
        for layer in reversed(self.layers):
            dout = layer.backward(dout, need_dx or layer is not first)
        return dout

    def loss(self, x, labels, training=False):
        logits = self.forward(x, training)
        value, self._loss_cache = F.softmax_cross_entropy_forward(logits, labels)
        return value

    def loss_backward(self, need_dx=True):
        """Backpropagate the last ``loss`` call; returns d loss / d input."""
        return self.backward(F.softmax_cross_entropy_backward(self._loss_cache), need_dx)

    def state_dict(self):
        return {name: t.data.copy() for name, t in self.params().items()}

    def load_state_dict(self, state):
        params = self.params()
        if set(state) != set(params):
            raise KeyError(f"parameter names differ: {sorted(set(state) ^ set(params))}")
        for name, t in params.items():
            arr = np.asarray(state[name], dtype=np.float64)
            if arr.shape != t.shape:
                raise ValueError(f"{name}: shape {arr.shape} != {t.shape}")
            t.data[...] = arr

    def predict(self, x, batch_size=500):
        return np.concatenate([self.forward(x[i:i + batch_size]).argmax(axis=1)
                               for i in range(0, len(x), batch_size)])
