"""Forward/backward kernels for the layers of the digit CNN.

Every ``*_forward`` returns ``(out, cache)`` and the matching ``*_backward``
takes ``(dout, cache)``. Arrays are float64, images are NCHW.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError, ShapeError
from .tensor import Tensor


def kaiming_uniform_init(rng, fan_in, shape):
    """Uniform on [-sqrt(6/fan_in), sqrt(6/fan_in)] (ReLU gain)."""
    if fan_in < 1:
        raise DomainError(f"fan_in must be >= 1, got {fan_in}")
    bound = math.sqrt(6.0 / fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape))


# -- convolution ------------------------------------------------------------

def conv2d_forward(x, weight, bias, stride=1, padding=1):
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError(f"conv2d expects 4-d input and weight, got {x.shape} and {weight.shape}")
    n, c, h, w = x.shape
    f, wc, kh, kw = weight.shape
    if wc != c:
        raise ShapeError(f"input has {c} channels, weight expects {wc}")
    if bias.shape != (f,):
        raise ShapeError(f"bias shape {bias.shape} != ({f},)")
    ho = (h + 2 * padding - kh) // stride + 1
    wo = (w + 2 * padding - kw) // stride + 1
    if ho < 1 or wo < 1:
        raise ShapeError("kernel larger than padded input")

    # im2col in channels-last layout: one strided copy per kernel offset
    xp = np.zeros((n, h + 2 * padding, w + 2 * padding, c))
    xp[:, padding:padding + h, padding:padding + w, :] = x.transpose(0, 2, 3, 1)
    cols = np.empty((n, ho, wo, kh, kw, c))
    for i in range(kh):
        for j in range(kw):
            cols[:, :, :, i, j, :] = xp[:, i:i + stride * ho:stride, j:j + stride * wo:stride, :]
    cols = cols.reshape(n * ho * wo, kh * kw * c)
    wmat = weight.transpose(0, 2, 3, 1).reshape(f, -1)
    out = (cols @ wmat.T + bias).reshape(n, ho, wo, f)
    # NCHW view over channels-last memory
    return out.transpose(0, 3, 1, 2), (x.shape, cols, weight, stride, padding)


def conv2d_backward(dout, cache, need_dx=True):
    x_shape, cols, weight, stride, padding = cache
    n, c, h, w = x_shape
    f, _, kh, kw = weight.shape
    _, _, ho, wo = dout.shape

    d2 = dout.transpose(0, 2, 3, 1).reshape(-1, f)
    dweight = (d2.T @ cols).reshape(f, kh, kw, c).transpose(0, 3, 1, 2)
    dbias = d2.sum(axis=0)
    if not need_dx:
        return None, np.ascontiguousarray(dweight), dbias

    wmat = weight.transpose(0, 2, 3, 1).reshape(f, -1)
    dcols = (d2 @ wmat).reshape(n, ho, wo, kh, kw, c)
    dxp = np.zeros((n, h + 2 * padding, w + 2 * padding, c))
    for i in range(kh):
        for j in range(kw):
            dxp[:, i:i + stride * ho:stride, j:j + stride * wo:stride, :] += dcols[:, :, :, i, j, :]
    dx = dxp[:, padding:padding + h, padding:padding + w, :].transpose(0, 3, 1, 2)
    return dx, np.ascontiguousarray(dweight), dbias


def conv2d(x, weight, bias, stride=1, padding=1):
    """Convolve an NCHW batch; returns only the output."""
    return conv2d_forward(x, weight, bias, stride, padding)[0]


# -- activations / pooling ----------------------------------------------------

def relu_forward(x):
    mask = x > 0
    return np.maximum(x, 0.0), mask


def relu_backward(dout, mask):
    return dout * mask


def relu(x):
    return relu_forward(x)[0]


def _quadrants(a):
    return a[:, :, 0::2, 0::2], a[:, :, 0::2, 1::2], a[:, :, 1::2, 0::2], a[:, :, 1::2, 1::2]


def maxpool2x2_forward(x):
    if x.ndim != 4:
        raise ShapeError(f"maxpool expects NCHW input, got {x.shape}")
    h, w = x.shape[2:]
    if h % 2 or w % 2:
        raise ShapeError(f"maxpool2x2 needs even spatial dims, got {h}x{w}")
    q = _quadrants(x)
    out = np.maximum(np.maximum(q[0], q[1]), np.maximum(q[2], q[3]))
    # winner masks in row-major window order; ties go to the first element
    taken = q[0] == out
    masks = [taken]
    for part in q[1:3]:
        m = (part == out) & ~taken
        masks.append(m)
        taken = taken | m
    masks.append(~taken)
    return out, (x, masks)


def maxpool2x2_backward(dout, cache):
    x, masks = cache
    dx = np.empty_like(x)  # same memory layout as the input
    for view, m in zip(_quadrants(dx), masks):
        view[...] = dout * m
    return dx


def maxpool2x2(x):
    return maxpool2x2_forward(x)[0]


def dropout_forward(x, rate=0.25, rng=None, training=True):
    """Inverted dropout; identity in evaluation mode or at rate 0."""
    if not 0.0 <= rate < 1.0:
        raise DomainError(f"dropout rate must lie in [0, 1), got {rate}")
    if not training or rate == 0.0:
        return x, None
    if rng is None:
        raise ValueError("training-mode dropout needs an Rng")
    mask = (rng.random(x.shape) >= rate) / (1.0 - rate)
    return x * mask, mask


def dropout_backward(dout, mask):
    return dout if mask is None else dout * mask


def dropout(x, rate=0.25, rng=None, training=True):
    return dropout_forward(x, rate, rng, training)[0]


# -- dense / loss ---------------------------------------------------------------

def dense_forward(x, weight, bias):
    if x.ndim != 2 or weight.ndim != 2 or x.shape[1] != weight.shape[0]:
        raise ShapeError(f"cannot multiply {x.shape} by {weight.shape}")
    if bias.shape != (weight.shape[1],):
        raise ShapeError(f"bias shape {bias.shape} != ({weight.shape[1]},)")
    return x @ weight + bias, (x, weight)


def dense_backward(dout, cache):
    x, weight = cache
    return dout @ weight.T, x.T @ dout, dout.sum(axis=0)


def dense(x, weight, bias):
    return dense_forward(x, weight, bias)[0]


def softmax_cross_entropy_forward(logits, labels):
    """Mean negative log-likelihood of ``labels`` under softmax(logits)."""
    labels = np.asarray(labels)
    if logits.ndim != 2 or labels.shape != (logits.shape[0],):
        raise ShapeError(f"logits {logits.shape} and labels {labels.shape} disagree")
    k = logits.shape[1]
    if labels.size and (labels.min() < 0 or labels.max() >= k):
        raise DomainError(f"labels must lie in [0, {k})")
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_z = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
    log_probs = shifted - log_z
    rows = np.arange(labels.shape[0])
    loss = -log_probs[rows, labels].mean()
    return float(loss), (np.exp(log_probs), labels)


def softmax_cross_entropy_backward(cache, dloss=1.0):
    probs, labels = cache
    grad = probs.copy()
    grad[np.arange(labels.shape[0]), labels] -= 1.0
    return grad * (dloss / labels.shape[0])


def softmax_cross_entropy(logits, labels):
    return softmax_cross_entropy_forward(logits, labels)[0]
