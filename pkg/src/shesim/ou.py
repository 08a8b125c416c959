"""Exact simulation of the Ornstein-Uhlenbeck coefficient processes.

Each mode ``u_ell`` solves ``du = -lambda_ell u dt + sigma dbeta`` and is
sampled on the time grid through its AR(1) form

    u(t_{i+1}) = exp(-lambda Delta) u(t_i) + sigma sqrt((1 - exp(-2 lambda Delta)) / (2 lambda)) N_i.

Draw order for a block of modes: one standard normal array of shape
``size + (n_modes, N + 1)`` for stationary starts (column 0 is the initial
draw, columns 1..N the innovations), or ``size + (n_modes, N)`` for zero
starts. A single mode therefore consumes its initial draw first and then the
innovations ``i = 0..N-1`` in order.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .model import Grid, InitialCondition, Parameters, eigenvalue


@dataclass(frozen=True)
class CoefficientPath:
    ell: int
    values: np.ndarray

    def __len__(self):
        return self.values.shape[-1]


def ar1_coefficients(p: Parameters, ell, dt: float):
    """Decay factor and innovation standard deviation of one AR(1) step.

    Vectorised over ``ell``. For ``lambda * dt`` large the decay underflows
    to exactly zero and the innovation reduces to the stationary standard
    deviation.
    """
    lam = np.asarray(eigenvalue(p, ell), dtype=float)
    x = lam * dt
    decay = np.exp(-x)
    # -expm1 keeps full precision when 2 lambda dt is tiny
    scale = np.sqrt(p.sigma2 * -np.expm1(-2.0 * x) / (2.0 * lam))
    if decay.ndim == 0:
        return float(decay), float(scale)
    return decay, scale


def stationary_sd(p: Parameters, ell):
    return np.sqrt(p.sigma2 / (2.0 * np.asarray(eigenvalue(p, ell), dtype=float)))


def ou_initial_draw(p: Parameters, ell: int, init, rng: np.random.Generator) -> float:
    """``u_ell(0)``: zero, or a draw from ``N(0, sigma2 / (2 lambda_ell))``."""
    if InitialCondition(init) is InitialCondition.ZERO:
        return 0.0
    return float(stationary_sd(p, ell) * rng.standard_normal())


def ar1_filter(decay, scale, start, innovations):
    """Run the AR(1) recursion for many independent paths at once.

    Parameters
    ----------
    decay, scale : array of shape (n,)
        Per-path coefficients.
    start : array of shape (..., n)
        Values at ``t_0``.
    innovations : array of shape (..., n, N)
        Standard normal innovations.

    Returns
    -------
    array of shape (..., n, N + 1)
    """
    decay = np.asarray(decay, dtype=float)
    scale = np.asarray(scale, dtype=float)
    innovations = np.asarray(innovations, dtype=float)
    *lead, n, N = innovations.shape
    out = np.empty((*lead, n, N + 1))
    out[..., 0] = start
    if N == 0:
        return out
    noise = innovations * scale[:, None]
    batch = int(np.prod(lead)) if lead else 1
    if N > 8 * n * batch:
        # few long paths: one C-level filter per path
        for j in range(n):
            zi = decay[j] * out[..., j, :1]
            out[..., j, 1:], _ = lfilter([1.0], [1.0, -decay[j]], noise[..., j, :], axis=-1, zi=zi)
    else:
        for i in range(N):
            out[..., i + 1] = decay * out[..., i] + noise[..., i]
    return out


def draw_ou_inputs(p: Parameters, ells, N: int, init, rng: np.random.Generator, size=()):
    """Consume the normals for a block of modes in the documented order.

    Returns the starting values, shape ``size + (n,)``, and the standard
    normal innovations, shape ``size + (n, N)``.
    """
    size = (int(size),) if np.isscalar(size) else tuple(size)
    ells = np.asarray(ells, dtype=np.int64).reshape(-1)
    n = ells.size
    if InitialCondition(init) is InitialCondition.STATIONARY:
        z = rng.standard_normal(size + (n, N + 1))
        return z[..., 0] * stationary_sd(p, ells), z[..., 1:]
    return np.zeros(size + (n,)), rng.standard_normal(size + (n, N))


def ou_paths(p: Parameters, ells, grid: Grid, init, rng: np.random.Generator, size=()):
    """Sample ``u_ell(t_0..t_N)`` for every ``ell`` in ``ells``.

    Returns an array of shape ``size + (len(ells), N + 1)``.
    """
    ells = np.asarray(ells, dtype=np.int64).reshape(-1)
    start, innovations = draw_ou_inputs(p, ells, grid.N, init, rng, size)
    if ells.size == 0 or grid.N == 0:
        return np.concatenate([start[..., None], innovations], axis=-1)
    decay, scale = ar1_coefficients(p, ells, grid.dt)
    return ar1_filter(np.atleast_1d(decay), np.atleast_1d(scale), start, innovations)


def ou_path(p: Parameters, ell: int, grid: Grid, init, rng: np.random.Generator) -> CoefficientPath:
    """One exact path of mode ``ell`` on the time grid."""
    if ell < 1:
        raise ValueError(f"mode index must be >= 1, got {ell}")
    values = ou_paths(p, [ell], grid, init, rng)[0]
    return CoefficientPath(int(ell), values)
