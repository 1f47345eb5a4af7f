"""Closed-form objects of the double-Bayesian model.

Everything here is a pure function of its arguments. Probabilities follow the
convention that the golden ratio is the root of ``p**2 + p - 1 = 0`` lying in
(0, 1), i.e. ~0.618 rather than ~1.618.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DivergenceError, DomainError

SQRT2 = math.sqrt(2.0)


def _open_unit(name, p):
    if not 0.0 < p < 1.0:
        raise DomainError(f"{name} must lie in (0, 1), got {p!r}")


@dataclass(frozen=True)
class BayesQuad:
    """The four probabilities P(A), P(B), P(A|B), P(B|A)."""

    p_a: float
    p_b: float
    p_a_given_b: float
    p_b_given_a: float

    def __post_init__(self):
        for name in ("p_a", "p_b", "p_a_given_b", "p_b_given_a"):
            _open_unit(name, getattr(self, name))

    @classmethod
    def canonical(cls, p_a, p_b):
        """Fill in the posteriors from the uncertainty principle."""
        return cls(p_a, p_b, p_a_given_b=1.0 - p_b, p_b_given_a=1.0 - p_a)

    def is_canonical(self, tol=1e-12):
        return (abs(self.p_a - (1.0 - self.p_b_given_a)) <= tol
                and abs(self.p_b - (1.0 - self.p_a_given_b)) <= tol)

    def bayes_residual(self):
        """P(A|B)/P(B|A) - P(A)/P(B); zero when Bayes' theorem holds."""
        return self.p_a_given_b / self.p_b_given_a - self.p_a / self.p_b


@dataclass(frozen=True)
class LogBase:
    """A logarithm base: positive and different from one."""

    lam: float

    def __post_init__(self):
        lam = self.lam
        if not (math.isfinite(lam) and lam > 0.0 and lam != 1.0):
            raise DomainError(f"logarithm base must be positive and != 1, got {lam!r}")

    def reciprocal(self):
        return LogBase(1.0 / self.lam)

    def __float__(self):
        return float(self.lam)


@dataclass(frozen=True)
class CircleAngle:
    """An angle on the first quadrant of the unit circle."""

    phi: float

    def __post_init__(self):
        if not 0.0 <= self.phi <= math.pi / 2:
            raise DomainError(f"angle must lie in [0, pi/2], got {self.phi!r}")

    @property
    def sin(self):
        return math.sin(self.phi)

    @property
    def cos(self):
        # cos(pi/2) evaluates to 6e-17 in floating point; pin the endpoint.
        if self.phi == math.pi / 2:
            return 0.0
        return math.cos(self.phi)


@dataclass(frozen=True)
class DerivedConstants:
    golden: float
    alpha: float
    eta: float


def _as_base(base):
    return base if isinstance(base, LogBase) else LogBase(float(base))


def golden_ratio():
    """Root of p**2 + p - 1 = 0 in (0, 1)."""
    return (math.sqrt(5.0) - 1.0) / 2.0


def momentum_alpha():
    """Momentum weight sqrt(2) * golden ratio, ~0.874."""
    return SQRT2 * golden_ratio()


def learning_eta():
    """Learning rate (1 - alpha)**2, ~0.016."""
    return (1.0 - momentum_alpha()) ** 2


def derived_constants():
    return DerivedConstants(golden=golden_ratio(), alpha=momentum_alpha(), eta=learning_eta())


def log_base(base, x):
    """Logarithm of ``x`` in an arbitrary base, ``ln(x) / ln(base)``."""
    base = _as_base(base)
    if not x > 0.0:
        raise DomainError(f"logarithm argument must be positive, got {x!r}")
    return math.log(x) / math.log(base.lam)


def solve_base(x, target):
    """Return the base ``lam`` with ``log_lam(x) == target``.

    Closed form ``lam = x ** (1 / target)``; exists for every positive
    ``x != 1`` and positive ``target``.
    """
    if not x > 0.0 or x == 1.0:
        raise DomainError(f"x must be positive and != 1, got {x!r}")
    if not target > 0.0:
        raise DomainError(f"target must be positive, got {target!r}")
    # exp/log keeps precision better than pow for targets near zero
    return LogBase(math.exp(math.log(x) / target))


def fixed_point_base(x):
    """Base for which ``x`` is a fixed point of the logarithm."""
    return solve_base(x, x)


def inner_residual(p):
    """p - (1 - p)/p; vanishes only at the golden ratio."""
    _open_unit("p", p)
    return p - (1.0 - p) / p


def _golden_poly(p):
    return p * p + p - 1.0


def solve_inner(lo=0.1, hi=0.9, tol=1e-12, max_iter=200):
    """Bisection root of p**2 + p - 1 on [lo, hi].

    The fixed-point map p -> (1 - p)/p has slope ~-2.618 at the root and
    diverges, so bracketing is used instead.
    """
    f_lo, f_hi = _golden_poly(lo), _golden_poly(hi)
    if f_lo * f_hi > 0.0:
        raise DomainError(f"[{lo}, {hi}] does not bracket a root")
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = _golden_poly(mid)
        if f_mid == 0.0 or (hi - lo) / 2.0 < tol:
            return mid
        if (f_mid < 0.0) == (f_lo < 0.0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def outer_residual(angle, base, p_a):
    """p_a - sin(phi) * log_lam(cos(phi)).

    At phi = pi/2 the logarithm of cos(phi) = 0 is unbounded for every base,
    which is reported as a DivergenceError rather than an infinity.
    """
    if not isinstance(angle, CircleAngle):
        angle = CircleAngle(float(angle))
    if p_a < 0.0:
        raise DomainError(f"p_a must be non-negative, got {p_a!r}")
    cos = angle.cos
    if cos <= 0.0:
        raise DivergenceError("log of cos(pi/2) = 0 diverges for every base")
    return p_a - angle.sin * log_base(base, cos)


def angle_for_p(p):
    """Angle whose sine is ``p``."""
    if not 0.0 <= p <= 1.0:
        raise DomainError(f"p must lie in [0, 1], got {p!r}")
    return CircleAngle(math.asin(p))


@dataclass(frozen=True)
class ChainReport:
    p: float
    quotient_arg: float  # (1 - p) / p
    square_arg: float  # 1 - p**2
    sin: float
    cos: float
    coincide: bool


def pythagorean_chain_check(p, tol=1e-12):
    """Evaluate both log arguments of the inner equation and the angle mapping.

    ``(1 - p)/p`` and ``1 - p**2`` agree only where ``p**2 = 1 - p``.
    """
    _open_unit("p", p)
    quotient_arg = (1.0 - p) / p
    square_arg = 1.0 - p * p
    angle = angle_for_p(p)
    return ChainReport(
        p=p,
        quotient_arg=quotient_arg,
        square_arg=square_arg,
        sin=angle.sin,
        cos=math.sqrt(square_arg),
        coincide=abs(quotient_arg - square_arg) <= tol,
    )
