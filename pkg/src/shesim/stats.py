"""Realized quadratic variations and their central limit normalizations."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .model import Grid, Parameters, eigenvalue
from .series import Bounded, inverse_eigenvalue_tail


class Statistic(str, enum.Enum):
    TEMPORAL = "vt"
    SPATIAL = "vsp"
    NONE = "none"


@dataclass(frozen=True)
class QVResult:
    kind: Statistic
    raw: float
    normalized: float


def _values(field):
    return np.asarray(getattr(field, "values", field), dtype=float)


def _weights(p: Parameters, M: int) -> np.ndarray:
    return np.exp(p.kappa * np.arange(M) / M)


def qv_temporal(field, p: Parameters, grid: Grid | None = None):
    """Rescaled temporal quadratic variation

        V_t = 1/(M N sqrt(Delta)) sum_{i<N} sum_{k<M} exp(kappa y_k) (X_{t_{i+1}}(y_k) - X_{t_i}(y_k))^2.

    ``field`` is a :class:`SampleField` or an array whose last two axes are
    ``(N + 1, M + 1)``; leading axes are kept.
    """
    grid = grid or field.grid
    X = _values(field)
    N, M = grid.N, grid.M
    if N < 1:
        raise ValueError("temporal quadratic variation needs N >= 1")
    inc = np.diff(X[..., :, :M], axis=-2)
    out = np.sum(inc**2 @ _weights(p, M), axis=-1) / (M * N * math.sqrt(grid.dt))
    return float(out) if np.ndim(out) == 0 else out


def qv_spatial(field, p: Parameters, grid: Grid | None = None):
    """Rescaled spatial quadratic variation

        V_sp = 1/(M N delta) sum_{i<N} sum_{k<M} exp(kappa y_k) (X_{t_i}(y_{k+1}) - X_{t_i}(y_k))^2.

    Rows ``i = 0..N-1`` enter; the last time row does not.
    """
    grid = grid or field.grid
    X = _values(field)
    N, M = grid.N, grid.M
    if N < 1:
        raise ValueError("spatial quadratic variation sums over i < N and needs N >= 1")
    inc = np.diff(X[..., :N, :], axis=-1)
    out = np.sum(inc**2 @ _weights(p, M), axis=-1) / (M * N * grid.dx)
    return float(out) if np.ndim(out) == 0 else out


def clt_constant_series(tolerance: float = 1e-10) -> Bounded:
    """``B = 2 + sum_{j>=1} (2 sqrt(j) - sqrt(j+1) - sqrt(j-1))^2`` with a tail radius.

    The j-th term is the squared second difference of ``sqrt`` and is at
    most ``(j-1)^{-3} / 16``, so the tail after ``J`` terms is at most
    ``(J^{-3} + J^{-2}/2) / 16``.
    """
    if not tolerance > 0:
        raise ValueError("tolerance must be positive")
    J = 2
    while (J**-3 + 0.5 * J**-2) / 16.0 >= tolerance:
        J *= 2
    j = np.arange(1, J + 1, dtype=float)
    # difference of forward and backward first differences, cancellation free
    second = 1.0 / (np.sqrt(j) + np.sqrt(j - 1.0)) - 1.0 / (np.sqrt(j + 1.0) + np.sqrt(j))
    head = 2.0 + math.fsum(second**2)
    tail_bound = (J**-3 + 0.5 * J**-2) / 16.0
    # the tail is positive: centre the estimate in [head, head + bound]
    return Bounded(head + tail_bound / 2.0, tail_bound / 2.0 + 1e-15)


def clt_constant_B(tolerance: float = 1e-10) -> float:
    return clt_constant_series(tolerance).value


B_CONSTANT = clt_constant_B(1e-12)


def temporal_limits(p: Parameters) -> tuple[float, float]:
    """Asymptotic mean and variance of ``V_t``: ``sigma2/sqrt(pi theta2)`` and ``B sigma2^2/(pi theta2)``."""
    mean = p.sigma2 / math.sqrt(math.pi * p.theta2)
    var = B_CONSTANT * p.sigma2**2 / (math.pi * p.theta2)
    return mean, var


def spatial_limits(p: Parameters) -> tuple[float, float]:
    """Asymptotic mean and variance of ``V_sp``: ``sigma2/(2 theta2)`` and ``sigma2^2/(2 theta2^2)``."""
    return p.sigma2 / (2.0 * p.theta2), p.sigma2**2 / (2.0 * p.theta2**2)


def normalize_temporal(v, p: Parameters, grid: Grid):
    mean, var = temporal_limits(p)
    return math.sqrt(grid.M * grid.N) * (np.asarray(v) - mean) / math.sqrt(var)


def normalize_spatial(v, p: Parameters, grid: Grid):
    mean, var = spatial_limits(p)
    return math.sqrt(grid.M * grid.N) * (np.asarray(v) - mean) / math.sqrt(var)


def quadratic_variation(field, p: Parameters, kind, grid: Grid | None = None) -> QVResult:
    grid = grid or field.grid
    kind = Statistic(kind)
    if kind is Statistic.TEMPORAL:
        raw = qv_temporal(field, p, grid)
        norm = normalize_temporal(raw, p, grid)
    elif kind is Statistic.SPATIAL:
        raw = qv_spatial(field, p, grid)
        norm = normalize_spatial(raw, p, grid)
    else:
        raise ValueError("no statistic requested")
    return QVResult(kind, float(raw), float(norm))


def truncation_bias_prediction(kind, p: Parameters, grid: Grid, K: int) -> float:
    """Predicted downward bias of the normalized statistic under truncation at ``K``.

    Returns ``sqrt(MN) * h^{-1} * sum_{ell >= K} sigma2 / lambda_ell / sd`` with
    ``h = sqrt(Delta)`` (temporal) or ``delta`` (spatial) and ``sd`` the
    asymptotic standard deviation of the statistic. The missing modes each
    add about ``sigma2 / lambda_ell`` per grid point to the mean squared
    increment; the value is an order-of-magnitude indicator, valid once
    ``lambda_K Delta`` is large in the temporal case.
    """
    if K < 1:
        raise ValueError(f"K must be >= 1, got {K}")
    kind = Statistic(kind)
    tail = p.sigma2 * inverse_eigenvalue_tail(p, K).value
    if kind is Statistic.TEMPORAL:
        h = math.sqrt(grid.dt)
        sd = math.sqrt(temporal_limits(p)[1])
    elif kind is Statistic.SPATIAL:
        h = grid.dx
        sd = math.sqrt(spatial_limits(p)[1])
    else:
        raise ValueError("no statistic requested")
    return math.sqrt(grid.M * grid.N) / h * tail / sd


def decay_rate(p: Parameters) -> float:
    """``c = min(pi^2 theta2, lambda_1)``, which satisfies ``c ell^2 <= lambda_ell`` for every ``ell``."""
    return min(math.pi**2 * p.theta2, eigenvalue(p, 1))


def theorem2_diagnostic(p: Parameters, grid: Grid, L: int) -> float:
    """Unnormalized TV indicator ``sqrt(MN) exp(-c L^2 M^2 Delta)`` (constant set to 1).

    Not a certified bound: the multiplicative constant is unknown.
    """
    c = decay_rate(p)
    return math.sqrt(grid.M * grid.N) * math.exp(-c * L**2 * grid.M**2 * grid.dt)
