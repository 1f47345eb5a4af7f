"""Central-difference verification of analytic gradients."""

from __future__ import annotations

import numpy as np

from .layers import Sequential
from .tensor import Rng


def _objective(target, x, labels, proj):
    if isinstance(target, Sequential) and labels is not None:
        return lambda: target.loss(x, labels, training=False)
    return lambda: float(np.sum(target.forward(x, training=False) * proj))


def _analytic(target, x, labels, proj):
    for t in target.params().values():
        t.zero_grad()
    if isinstance(target, Sequential) and labels is not None:
        target.loss(x, labels, training=False)
        return target.loss_backward()
    target.forward(x, training=False)
    return target.backward(proj)


def _coords(size, max_coords, rng):
    if max_coords is None or size <= max_coords:
        return np.arange(size)
    return np.sort(rng.generator.choice(size, max_coords, replace=False))


def gradient_errors(target, x, labels=None, epsilon=1e-5, max_coords=None, check_input=True, seed=0):
    """Per-tensor max relative error between analytic and numeric gradients.

    ``target`` is a layer or a ``Sequential``. A ``Sequential`` with labels is
    checked through its cross-entropy loss; otherwise the scalar objective is
    ``sum(out * R)`` for a fixed random ``R``. Errors are
    ``|a - n| / max(1, |a| + |n|)``. Tensors larger than ``max_coords`` are
    checked on a random subset of coordinates.
    """
    rng = Rng(seed)
    x = np.array(x, dtype=np.float64)
    proj = None
    if not (isinstance(target, Sequential) and labels is not None):
        proj = rng.child(0).normal(size=target.forward(x, training=False).shape)
    f = _objective(target, x, labels, proj)
    dx = _analytic(target, x, labels, proj)

    buffers = {name: (t.data, t.grad.copy()) for name, t in target.params().items()}
    if check_input:
        buffers["input"] = (x, dx)

    errors = {}
    pick = rng.child(1)
    for name, (data, analytic) in buffers.items():
        flat = data.reshape(-1)
        worst = 0.0
        for i in _coords(flat.size, max_coords, pick):
            orig = flat[i]
            flat[i] = orig + epsilon
            up = f()
            flat[i] = orig - epsilon
            down = f()
            flat[i] = orig
            num = (up - down) / (2.0 * epsilon)
            a = analytic.reshape(-1)[i]
            worst = max(worst, abs(a - num) / max(1.0, abs(a) + abs(num)))
        errors[name] = worst
    return errors


def grad_check(target, x, labels=None, epsilon=1e-5, max_coords=None, check_input=True, seed=0):
    """Maximum relative gradient error over all checked tensors."""
    errs = gradient_errors(target, x, labels, epsilon, max_coords, check_input, seed)
    return max(errs.values()) if errs else 0.0
