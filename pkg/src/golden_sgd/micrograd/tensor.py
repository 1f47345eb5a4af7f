from __future__ import annotations

import numpy as np

from ..errors import ShapeError


class Tensor:
    """A float64 array paired with a gradient buffer of the same shape."""

    __slots__ = ("data", "grad")

    def __init__(self, data, grad=None):
        data = np.ascontiguousarray(data, dtype=np.float64)
        if grad is None:
            grad = np.zeros_like(data)
        else:
            grad = np.ascontiguousarray(grad, dtype=np.float64)
            if grad.shape != data.shape:
                raise ShapeError(f"grad shape {grad.shape} != data shape {data.shape}")
        self.data = data
        self.grad = grad

    @classmethod
    def zeros(cls, shape):
        return cls(np.zeros(shape))

    @property
    def shape(self):
        return self.data.shape

    @property
    def size(self):
        return self.data.size

    def zero_grad(self):
        self.grad[...] = 0.0

    def copy(self):
        return Tensor(self.data.copy(), self.grad.copy())

    def __repr__(self):
        return f"Tensor(shape={self.shape})"


class Rng:
    """Seeded random stream with independent, reproducible child streams.

    ``Rng(seed).child(*keys)`` always yields the same stream for the same
    ``(seed, keys)``, and different keys give statistically independent
    streams (numpy ``SeedSequence`` spawn keys).
    """

    def __init__(self, seed=0, _keys=()):
        if seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.seed = int(seed)
        self.keys = tuple(int(k) for k in _keys)
        seq = np.random.SeedSequence(self.seed, spawn_key=self.keys)
        self.generator = np.random.Generator(np.random.PCG64(seq))

    def child(self, *keys):
        return Rng(self.seed, self.keys + tuple(keys))

    # thin pass-throughs used across the package
    def uniform(self, low, high, size=None):
        return self.generator.uniform(low, high, size)

    def random(self, size=None):
        return self.generator.random(size)

    def permutation(self, n):
        return self.generator.permutation(n)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.generator.normal(loc, scale, size)

    def __repr__(self):
        return f"Rng(seed={self.seed}, keys={self.keys})"
