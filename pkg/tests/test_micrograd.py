import math

import numpy as np
import pytest

from golden_sgd.errors import DomainError, ShapeError, TruncationError, FormatError
from golden_sgd.micrograd import (
    Conv2d, Dense, Dropout, Flatten, MaxPool2x2, ReLU, Rng, Sequential, build_mnist_cnn,
    conv2d, dense, dropout, from_bytes, gradient_errors, grad_check, kaiming_uniform_init,
    load_checkpoint, maxpool2x2, relu, save_checkpoint, softmax_cross_entropy, to_bytes,
)
from golden_sgd.micrograd import functional as F
from oracles import direct_conv


# -- rng and init ---------------------------------------------------------------

def test_rng_streams():
    a = Rng(3).child(1, 2).random(5)
    assert np.array_equal(a, Rng(3).child(1, 2).random(5))
    assert not np.array_equal(a, Rng(3).child(2, 1).random(5))
    assert not np.array_equal(a, Rng(4).child(1, 2).random(5))


def test_kaiming_bounds_and_moments():
    t = kaiming_uniform_init(Rng(0), 6, (1000,))
    assert t.data.min() >= -1 and t.data.max() <= 1
    big = kaiming_uniform_init(Rng(1), 9, (100_000,)).data
    assert abs(big.mean()) < 0.01
    assert big.var() == pytest.approx((6 / 9) / 3, abs=0.01)
    with pytest.raises(DomainError):
        kaiming_uniform_init(Rng(0), 0, (3,))


# -- conv -----------------------------------------------------------------------

def test_conv_identity_kernel():
    x = np.random.default_rng(0).normal(size=(2, 1, 5, 5))
    w = np.zeros((1, 1, 3, 3))
    w[0, 0, 1, 1] = 1
    assert np.allclose(conv2d(x, w, np.zeros(1)), x, atol=0)


def test_conv_ones_kernel_on_constant():
    x = np.full((1, 1, 5, 5), 5.0)
    out = conv2d(x, np.ones((1, 1, 3, 3)), np.zeros(1))
    assert out[0, 0, 2, 2] == 45.0
    assert out[0, 0, 0, 0] == 20.0  # corner sees 4 pixels


def test_conv_matches_direct_loops():
    g = np.random.default_rng(1)
    x, w, b = g.normal(size=(1, 1, 4, 4)), g.normal(size=(1, 1, 3, 3)), g.normal(size=1)
    assert np.max(np.abs(conv2d(x, w, b) - direct_conv(x, w, b))) < 1e-12
    x, w, b = g.normal(size=(2, 3, 6, 5)), g.normal(size=(4, 3, 3, 3)), g.normal(size=4)
    assert np.max(np.abs(conv2d(x, w, b) - direct_conv(x, w, b))) < 1e-12


def test_conv_shape_errors():
    with pytest.raises(ShapeError):
        conv2d(np.zeros((1, 2, 4, 4)), np.zeros((1, 1, 3, 3)), np.zeros(1))
    with pytest.raises(ShapeError):
        conv2d(np.zeros((1, 1, 4, 4)), np.zeros((2, 1, 3, 3)), np.zeros(3))


# -- relu / pool / dropout --------------------------------------------------------

def test_relu():
    assert relu(np.array([-1.0, 0.0, 2.0])).tolist() == [0, 0, 2]
    out, mask = F.relu_forward(-np.ones(4))
    assert not out.any() and not F.relu_backward(np.ones(4), mask).any()


def test_maxpool_values_and_shape():
    x = np.array([[1.0, 2.0], [3.0, 4.0]]).reshape(1, 1, 2, 2)
    assert maxpool2x2(x).item() == 4.0
    assert maxpool2x2(np.zeros((1, 16, 28, 28))).shape == (1, 16, 14, 14)
    with pytest.raises(ShapeError):
        maxpool2x2(np.zeros((1, 1, 3, 4)))


def test_maxpool_tie_goes_to_first():
    x = np.full((1, 1, 4, 4), 7.0)
    out, cache = F.maxpool2x2_forward(x)
    assert np.all(out == 7.0)
    dx = F.maxpool2x2_backward(np.ones_like(out), cache)
    want = np.zeros((4, 4))
    want[0::2, 0::2] = 1.0
    assert np.array_equal(dx[0, 0], want)


def test_dropout():
    x = np.random.default_rng(2).normal(size=(50, 40))
    assert dropout(x, 0.25, Rng(0), training=False) is x
    assert dropout(x, 0.0, Rng(0), training=True) is x
    y = dropout(x, 0.25, Rng(0), training=True)
    kept = y != 0
    assert np.allclose(y[kept], x[kept] / 0.75)
    assert 0.7 < kept.mean() < 0.8
    with pytest.raises(DomainError):
        dropout(x, 1.0, Rng(0))


# -- dense / loss -----------------------------------------------------------------

def test_dense_identity_and_params():
    x = np.random.default_rng(3).normal(size=(3, 4))
    assert np.array_equal(dense(x, np.eye(4), np.zeros(4)), x)
    assert sum(t.size for t in Dense(1568, 128, Rng(0)).params().values()) == 200_832
    with pytest.raises(ShapeError):
        dense(x, np.eye(3), np.zeros(3))


def test_dense_gradient():
    layer = Dense(8, 3, Rng(0))
    x = np.random.default_rng(4).normal(size=(4, 8))
    assert grad_check(layer, x) < 1e-6


def test_softmax_ce():
    assert softmax_cross_entropy(np.zeros((3, 10)), [0, 4, 9]) == pytest.approx(math.log(10), abs=1e-12)
    losses = []
    for margin in (1.0, 5.0, 10.0):
        logits = np.zeros((1, 10))
        logits[0, 2] = margin
        losses.append(softmax_cross_entropy(logits, [2]))
    assert losses[0] > losses[1] > losses[2] > 0
    with pytest.raises(DomainError):
        softmax_cross_entropy(np.zeros((1, 10)), [10])


def test_softmax_ce_gradient_matches_differences():
    g = np.random.default_rng(5)
    logits, labels = g.normal(size=(4, 10)), np.array([1, 0, 9, 3])
    _, cache = F.softmax_cross_entropy_forward(logits, labels)
    analytic = F.softmax_cross_entropy_backward(cache)
    eps = 1e-6
    for idx in np.ndindex(logits.shape):
        up, down = logits.copy(), logits.copy()
        up[idx] += eps
        down[idx] -= eps
        num = (softmax_cross_entropy(up, labels) - softmax_cross_entropy(down, labels)) / (2 * eps)
        assert analytic[idx] == pytest.approx(num, abs=1e-8)


# -- gradient checks ----------------------------------------------------------------

@pytest.mark.parametrize("make,shape", [
    (lambda: Conv2d(2, 3, Rng(0)), (2, 2, 6, 6)),
    (lambda: Dense(8, 3, Rng(0)), (4, 8)),
    (lambda: ReLU(), (3, 7)),
    (lambda: MaxPool2x2(), (2, 3, 4, 4)),
    (lambda: Flatten(), (2, 3, 2, 2)),
])
def test_layer_gradients(make, shape):
    x = np.random.default_rng(6).normal(size=shape)
    assert grad_check(make(), x) < 1e-5


def test_stack_gradients_small_cnn():
    r = Rng(2)
    model = Sequential([Conv2d(1, 2, r.child(0), name="c1"), ReLU(), MaxPool2x2(), Flatten(),
                        Dense(2 * 3 * 3, 4, r.child(1), name="d1")])
    x = np.random.default_rng(7).normal(size=(2, 1, 6, 6))
    errs = gradient_errors(model, x, labels=[1, 3])
    assert max(errs.values()) < 1e-5


def test_full_cnn_gradient_without_dropout():
    model = build_mnist_cnn(Rng(0), dropout=0.0)
    x = np.random.default_rng(8).uniform(-1, 1, size=(1, 1, 28, 28))
    errs = gradient_errors(model, x, labels=[3], max_coords=40)
    assert set(errs) >= {"conv1.weight", "fc2.bias", "input"}
    assert max(errs.values()) < 1e-4


class _Doubled(Dense):
    def backward(self, dout, need_dx=True):
        dx = super().backward(dout, need_dx)
        self.weight.grad *= 2
        return dx


def test_checker_detects_wrong_gradient():
    x = 10 * np.random.default_rng(9).normal(size=(4, 8))
    assert grad_check(_Doubled(8, 3, Rng(0)), x) > 0.1


# -- model ----------------------------------------------------------------------------

def test_cnn_parameter_count_and_forward():
    model = build_mnist_cnn(Rng(0))
    assert model.num_params() == 206_922
    logits = model.forward(np.zeros((1, 1, 28, 28)))
    assert logits.shape == (1, 10) and np.all(np.isfinite(logits))


def test_cnn_build_is_deterministic():
    a, b = build_mnist_cnn(Rng(5)).state_dict(), build_mnist_cnn(Rng(5)).state_dict()
    assert all(np.array_equal(a[k], b[k]) for k in a)
    c = build_mnist_cnn(Rng(6)).state_dict()
    assert not np.array_equal(a["fc1.weight"], c["fc1.weight"])


def test_training_step_is_deterministic():
    x = np.random.default_rng(10).uniform(-1, 1, size=(8, 1, 28, 28))
    y = np.arange(8)
    grads = []
    for _ in range(2):
        model = build_mnist_cnn(Rng(1))
        model.loss(x, y, training=True)
        model.loss_backward()
        grads.append({k: t.grad.copy() for k, t in model.params().items()})
    assert all(np.array_equal(grads[0][k], grads[1][k]) for k in grads[0])


# -- checkpoints ------------------------------------------------------------------------

def test_checkpoint_round_trip(tmp_path):
    state = build_mnist_cnn(Rng(0)).state_dict()
    state["opt/eta"] = np.array(0.016)
    path = tmp_path / "m.gsgd"
    save_checkpoint(path, state)
    back = load_checkpoint(path)
    assert list(back) == list(state)
    for k in state:
        assert back[k].shape == state[k].shape
        assert back[k].tobytes() == state[k].tobytes()
    assert to_bytes(back) == path.read_bytes()


def test_checkpoint_rejects_bad_input():
    raw = to_bytes({"w": np.arange(4.0)})
    with pytest.raises(TruncationError):
        from_bytes(raw[:-3])
    with pytest.raises(FormatError):
        from_bytes(b"XXXX" + raw[4:])


def test_load_state_dict_checks_names():
    model = build_mnist_cnn(Rng(0))
    with pytest.raises(KeyError):
        model.load_state_dict({"nope": np.zeros(1)})


def test_dropout_layer_uses_its_stream():
    x = np.ones((4, 10))
    a = Dropout(0.5, Rng(0).child(7)).forward(x, training=True)
    b = Dropout(0.5, Rng(0).child(7)).forward(x, training=True)
    assert np.array_equal(a, b)
