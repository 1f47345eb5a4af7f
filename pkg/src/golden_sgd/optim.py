"""SGD with momentum and Adam, operating in place on dicts of float64 arrays.

``params`` and ``grads`` are mappings from parameter name to ndarray. The
SGD update is

    delta(t) = -eta * grad + alpha * delta(t-1)
    w       <- w + delta(t)

with ``delta(-1) = 0``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .bayes_core import learning_eta, momentum_alpha
from .errors import DomainError, NonFiniteGradientError


def _check_finite(grads):
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradientError(name)


def _zeros_like(params):
    return {name: np.zeros_like(p, dtype=np.float64) for name, p in params.items()}


@dataclass
class SgdState:
    eta: float
    alpha: float
    velocity: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"eta must be positive, got {self.eta}")
        if not 0.0 <= self.alpha < 1.0:
            raise DomainError(f"alpha must lie in [0, 1), got {self.alpha}")

    @classmethod
    def for_params(cls, params, eta, alpha):
        return cls(eta, alpha, _zeros_like(params))

    def state_dict(self):
        out = {"sgd/eta": np.float64(self.eta), "sgd/alpha": np.float64(self.alpha)}
        out.update({f"sgd/velocity/{k}": v for k, v in self.velocity.items()})
        return out

    @classmethod
    def from_state_dict(cls, state):
        prefix = "sgd/velocity/"
        velocity = {k[len(prefix):]: np.array(v) for k, v in state.items() if k.startswith(prefix)}
        return cls(float(state["sgd/eta"]), float(state["sgd/alpha"]), velocity)


@dataclass
class AdamState:
    eta: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    epsilon: float = 1e-8
    t: int = 0
    m: dict = field(default_factory=dict)
    v: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.eta > 0:
            raise DomainError(f"eta must be positive, got {self.eta}")
        for name in ("beta1", "beta2"):
            if not 0.0 <= getattr(self, name) < 1.0:
                raise DomainError(f"{name} must lie in [0, 1)")
        if not self.epsilon > 0:
            raise DomainError("epsilon must be positive")

    @classmethod
    def for_params(cls, params, eta, beta1=0.9, beta2=0.999, epsilon=1e-8):
        return cls(eta, beta1, beta2, epsilon, 0, _zeros_like(params), _zeros_like(params))

    def state_dict(self):
        out = {f"adam/{k}": np.float64(getattr(self, k))
               for k in ("eta", "beta1", "beta2", "epsilon", "t")}
        out.update({f"adam/m/{k}": a for k, a in self.m.items()})
        out.update({f"adam/v/{k}": a for k, a in self.v.items()})
        return out

    @classmethod
    def from_state_dict(cls, state):
        def sub(prefix):
            return {k[len(prefix):]: np.array(a) for k, a in state.items() if k.startswith(prefix)}
        return cls(float(state["adam/eta"]), float(state["adam/beta1"]), float(state["adam/beta2"]),
                   float(state["adam/epsilon"]), int(state["adam/t"]), sub("adam/m/"), sub("adam/v/"))


def sgd_step(params, grads, state):
    """One momentum-SGD update; mutates ``params`` and ``state.velocity``."""
    _check_finite(grads)
    for name, w in params.items():
        prev = state.velocity.get(name)
        if prev is None:
            prev = state.velocity[name] = np.zeros_like(w)
        delta = -state.eta * grads[name] + state.alpha * prev
        w += delta
        state.velocity[name] = delta
    return params


def adam_step(params, grads, state):
    """One bias-corrected Adam update; mutates ``params`` and the moments."""
    _check_finite(grads)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.t
    c2 = 1.0 - b2 ** state.t
    for name, w in params.items():
        g = grads[name]
        m = state.m.get(name)
        v = state.v.get(name)
        m = b1 * (np.zeros_like(w) if m is None else m) + (1.0 - b1) * g
        v = b2 * (np.zeros_like(w) if v is None else v) + (1.0 - b2) * g * g
        state.m[name], state.v[name] = m, v
        w -= state.eta * (m / c1) / (np.sqrt(v / c2) + state.epsilon)
    return params


def make_theoretical_sgd(params):
    """SGD state with the derived learning rate and momentum weight."""
    return SgdState.for_params(params, learning_eta(), momentum_alpha())


def make_optimizer(name, params, eta, momentum):
    """Optimizer state for a grid cell; Adam's momentum axis is beta1."""
    if name == "sgd":
        return SgdState.for_params(params, eta, momentum)
    if name == "adam":
        return AdamState.for_params(params, eta, beta1=momentum)
    raise DomainError(f"unknown optimizer {name!r}")


def step(state, params, grads):
    if isinstance(state, SgdState):
        return sgd_step(params, grads, state)
    return adam_step(params, grads, state)


def state_from_dict(state):
    if "sgd/eta" in state:
        return SgdState.from_state_dict(state)
    return AdamState.from_state_dict(state)
