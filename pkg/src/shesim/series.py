"""Certified sums of ``sigma2 / (2 lambda_ell)`` over arithmetic progressions.

The summand ``f(u) = sigma2 / (2 (a u^2 + c))`` with ``a = pi^2 theta2`` and
``c = theta1^2/(4 theta2) - theta0`` is positive, decreasing and convex for
large ``u``. For such ``f`` the midpoint and trapezoid rules bracket the sum:

    int_{J}^inf g + g(J)/2  <=  sum_{j >= J} g(j)  <=  int_{J - 1/2}^inf g,

with ``g(x) = f(start + step x)``. Both integrals are elementary.
"""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from .model import Parameters, eigenvalue

EPS = np.finfo(float).eps


class Bounded(NamedTuple):
    """A value together with a guaranteed error radius."""

    value: float
    radius: float

    @property
    def lower(self) -> float:
        return self.value - self.radius

    @property
    def upper(self) -> float:
        return self.value + self.radius


def _half_variance(p: Parameters, u):
    return p.sigma2 / (2.0 * eigenvalue(p, u))


def half_variance_integral(p: Parameters, u: float) -> float:
    """``int_u^inf sigma2 / (2 lambda(x)) dx`` for ``u > 0`` with ``lambda > 0`` on ``[u, inf)``."""
    a = math.pi**2 * p.theta2
    c = p.shift
    if not u > 0 or a * u * u + c <= 0:
        raise ValueError(f"integral lower limit {u} outside the positive eigenvalue range")
    scale = p.sigma2 / 2.0 / (a * u)
    if c == 0.0:
        return scale
    w = math.sqrt(abs(c) / a) / u
    if c > 0:
        return scale * (math.atan(w) / w)
    return scale * (math.atanh(w) / w)


def _convex_from(p: Parameters, u: float) -> bool:
    a = math.pi**2 * p.theta2
    return u > 0 and a * u * u + p.shift > 0 and 3.0 * a * u * u > p.shift


def progression_tail(p: Parameters, start: int, step: int) -> Bounded:
    """``sum_{j >= 0} sigma2 / (2 lambda_{start + j step})`` with a certified radius.

    Requires ``start - step/2`` to lie where the summand is positive and
    convex; pick ``start`` large enough otherwise.
    """
    left = start - step / 2.0
    if not _convex_from(p, left):
        raise ValueError(
            f"tail start {start} (step {step}) too small for the integral bracket"
        )
    lo = half_variance_integral(p, float(start)) / step + _half_variance(p, start) / 2.0
    hi = half_variance_integral(p, left) / step
    # integral evaluations carry a few ulps each
    slack = 8.0 * EPS * hi
    return Bounded(float(0.5 * (lo + hi)), float(0.5 * (hi - lo) + slack))


def progression_partial(p: Parameters, start: int, step: int, stop: int) -> Bounded:
    """Exact-rounded ``sum_{ell in start + step N, ell < stop} sigma2/(2 lambda_ell)``."""
    if stop <= start:
        return Bounded(0.0, 0.0)
    ell = np.arange(start, stop, step, dtype=float)
    terms = _half_variance(p, ell)
    value = math.fsum(terms)
    return Bounded(float(value), float(4.0 * EPS * abs(value)))


def progression_sum(p: Parameters, start: int, step: int, cutoff: int) -> Bounded:
    """Full sum over ``start + step N`` split as partial sum below ``cutoff``
    plus certified tail from the first index at or above ``cutoff``."""
    if cutoff <= start:
        first = start
    else:
        first = start + step * (-(-(cutoff - start) // step))
    head = progression_partial(p, start, step, first)
    tail = progression_tail(p, first, step)
    return Bounded(head.value + tail.value, head.radius + tail.radius)


def inverse_eigenvalue_tail(p: Parameters, K: int, cutoff: int | None = None) -> Bounded:
    """``sum_{ell >= K} 1 / lambda_ell`` with a certified radius."""
    cutoff = max(K, 64) if cutoff is None else max(K, cutoff)
    s = progression_sum(p, K, 1, cutoff)
    # sigma2/(2 lambda) -> 1/lambda
    factor = 2.0 / p.sigma2
    return Bounded(s.value * factor, s.radius * factor)
