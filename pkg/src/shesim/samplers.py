"""Replacement and truncation samplers on the space-time grid.

On the grid ``y_k = k/M`` every eigenfunction coincides with ``+e_m``, ``-e_m``
or zero for some ``m < M``, so the field is carried by the ``M - 1`` aliased
coefficient processes

    U_m = sum_{plus set} u_ell - sum_{minus set} u_ell.

The replacement method simulates the modes ``ell < L M`` exactly and replaces
the whole remainder of each ``U_m`` by iid ``N(0, s_m^2)`` draws, where the
tail variance ``s_m^2`` has a closed form through the stationary covariance
kernel ``rho``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse

from . import ou
from ._streams import as_seed_sequence, substream
from .model import (
    GAMMA_ZERO_TOL,
    Grid,
    InitialCondition,
    ModeIndexSets,
    Parameters,
    aliased_sign_and_index,
    grid_eigenfunctions,
)
from .series import Bounded, progression_partial, progression_sum


@dataclass(frozen=True)
class ReplacementConfig:
    L: int = 1

    def __post_init__(self):
        if int(self.L) != self.L or self.L < 1:
            raise ValueError(f"L must be a positive integer, got {self.L!r}")

    def as_dict(self):
        return {"method": "replacement", "L": int(self.L)}


@dataclass(frozen=True)
class TruncationConfig:
    K: int

    def __post_init__(self):
        if int(self.K) != self.K or self.K < 1:
            raise ValueError(f"K must be a positive integer, got {self.K!r}")

    def as_dict(self):
        return {"method": "truncation", "K": int(self.K)}


@dataclass
class SampleField:
    """Values ``X_{t_i}(y_k)`` on the grid, row ``i`` and column ``k``.

    ``values`` may carry leading batch axes. ``coefficients`` holds the
    aliased coefficient processes ``U_m(t_i)`` (last axis ``m = 1..M-1``)
    when the sampler produces them.
    """

    grid: Grid
    values: np.ndarray
    parameters: Parameters
    init: InitialCondition
    method: str
    config: dict = field(default_factory=dict)
    seed: dict = field(default_factory=dict)
    coefficients: np.ndarray | None = None

    def meta(self) -> dict:
        return {
            "method": self.method,
            "config": dict(self.config),
            "init": self.init.value,
            "seed": dict(self.seed),
            "parameters": self.parameters.as_dict(),
            "grid": {"N": self.grid.N, "M": self.grid.M, "T": self.grid.T},
        }


def _seed_info(ss: np.random.SeedSequence) -> dict:
    return {"entropy": int(ss.entropy), "spawn_key": [int(k) for k in ss.spawn_key]}


# --- tail variances ---------------------------------------------------------


def rho(p: Parameters, x, y):
    """Stationary covariance kernel of ``exp(kappa . / 2) X_0``.

    Three branches according to the sign of ``gamma``; the printed formula is
    for ``x <= y`` and the kernel is symmetric.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    lo = np.minimum(x, y)
    hi = np.maximum(x, y)
    g0 = p.gamma0
    if abs(p.gamma) < GAMMA_ZERO_TOL:
        shape = lo * (1.0 - hi)
    elif p.gamma < 0:
        shape = np.sin(g0 * (1.0 - hi)) * np.sin(g0 * lo) / (g0 * math.sin(g0))
    else:
        # sinh(a)sinh(b)/sinh(c) overflows for large g0; use exponentials
        shape = (
            np.exp(g0 * (lo - hi))
            * -np.expm1(-2.0 * g0 * (1.0 - hi))
            * -np.expm1(-2.0 * g0 * lo)
            / (2.0 * g0 * -np.expm1(-2.0 * g0))
        )
    out = p.sigma2 / (2.0 * p.theta2) * shape
    return float(out) if out.ndim == 0 else out


@lru_cache(maxsize=32)
def _aliased_totals(p: Parameters, M: int) -> np.ndarray:
    # (1/M^2) b_m^T Sigma b_m for m = 1..M-1, one matrix product
    y = np.arange(M + 1) / M
    sigma = rho(p, y[:, None], y[None, :])
    b = math.sqrt(2.0) * np.sin(np.pi * np.outer(np.arange(1, M), y))
    b[:, 0] = 0.0
    b[:, -1] = 0.0
    out = np.einsum("mk,mk->m", b @ sigma, b) / M**2
    out.setflags(write=False)
    return out


def aliased_variance_closed(p: Parameters, M: int, m: int) -> float:
    """``sum_{ell in I_m} sigma2/(2 lambda_ell)`` via the kernel ``rho``."""
    _check_mode(M, m)
    return float(_aliased_totals(p, M)[m - 1])


def _check_mode(M, m):
    if M < 2:
        raise ValueError(f"need M >= 2, got {M}")
    if not 1 <= m <= M - 1:
        raise ValueError(f"need 1 <= m <= M-1, got m={m}, M={M}")


def _simulated_variance(p: Parameters, M: int, m: int, L: int) -> float:
    bound = L * M
    plus = progression_partial(p, m, 2 * M, bound).value
    minus = progression_partial(p, 2 * M - m, 2 * M, bound).value
    return plus + minus


def tail_variance_closed(p: Parameters, M: int, m: int, L: int) -> float:
    """Variance ``s_m^2`` of the replaced modes ``ell >= L M`` of class ``m``.

    Raises
    ------
    FloatingPointError
        If cancellation leaves a non-positive value.
    """
    _check_mode(M, m)
    if L < 1:
        raise ValueError(f"L must be >= 1, got {L}")
    s2 = aliased_variance_closed(p, M, m) - _simulated_variance(p, M, m, L)
    if not s2 > 0:
        raise FloatingPointError(
            f"tail variance s_m^2 = {s2!r} is not positive (M={M}, m={m}, L={L})"
        )
    return s2


@lru_cache(maxsize=32)
def tail_variances(p: Parameters, M: int, L: int) -> np.ndarray:
    """``s_m^2`` for ``m = 1..M-1`` (cached, read-only)."""
    out = np.array([tail_variance_closed(p, M, m, L) for m in range(1, M)])
    out.setflags(write=False)
    return out


def _first_at_or_above(start: int, step: int, bound: int) -> int:
    if start >= bound:
        return start
    return start + step * (-(-(bound - start) // step))


def tail_variance_series(p: Parameters, M: int, m: int, L: int, cutoff: int | None = None) -> Bounded:
    """``s_m^2`` by direct summation over ``I_m`` from ``L M`` on.

    Terms below ``cutoff`` are summed exactly rounded, the rest is bracketed
    by integrals. Returns the value with a guaranteed error radius.
    """
    _check_mode(M, m)
    bound = L * M
    if cutoff is None:
        cutoff = max(bound, 64 * M)
    if cutoff < bound:
        raise ValueError(f"cutoff {cutoff} must be >= L*M = {bound}")
    total = Bounded(0.0, 0.0)
    for start in (m, 2 * M - m):
        first = _first_at_or_above(start, 2 * M, bound)
        part = progression_sum(p, first, 2 * M, cutoff)
        total = Bounded(total.value + part.value, total.radius + part.radius)
    return total


# --- samplers ---------------------------------------------------------------


def _fold_matrix(ells, M):
    """Sparse map from mode paths to aliased coefficients ``U_1..U_{M-1}``."""
    rows, cols, vals = [], [], []
    for j, ell in enumerate(np.asarray(ells).tolist()):
        m, s = aliased_sign_and_index(ell, M)
        if s:
            rows.append(j)
            cols.append(m - 1)
            vals.append(float(s))
    return scipy.sparse.csr_matrix((vals, (rows, cols)), shape=(len(ells), M - 1))


def _fold(paths, fold):
    """``paths[..., j, i]`` -> ``U[..., i, m]`` via the sparse fold matrix."""
    *lead, n, T = paths.shape
    flat = np.moveaxis(paths, -2, 0).reshape(n, -1)
    folded = np.asarray(fold.T @ flat)
    U = folded.reshape((fold.shape[1], *lead, T))
    return np.moveaxis(U, 0, -1)


@lru_cache(maxsize=32)
def _basis(p: Parameters, M: int) -> np.ndarray:
    E = grid_eigenfunctions(p, M)
    E.setflags(write=False)
    return E


def synthesize(p: Parameters, M: int, U) -> np.ndarray:
    """``X(t_i, y_k) = sum_m U_m(t_i) e_m(y_k)`` in ascending ``m``."""
    return U @ _basis(p, M)


def sample_replacement(
    p: Parameters,
    grid: Grid,
    init,
    cfg: ReplacementConfig,
    seed=None,
    size=(),
) -> SampleField:
    """Replacement method sample on ``grid``.

    For each ``m`` the substream keyed by ``m`` first supplies the OU inputs
    of the simulated modes ``ell in I_m, ell < L M`` (ascending ``ell``), then
    ``N + 1`` normals for the replacement variables ``R_m(0..N)``. Modes of
    the minus set enter with a negative sign. ``size`` adds leading batch
    axes.
    """
    M, N = grid.M, grid.N
    if M < 2:
        raise ValueError(f"replacement sampling needs M >= 2, got M={M}")
    init = InitialCondition(init)
    size = (int(size),) if np.isscalar(size) else tuple(size)
    ss = as_seed_sequence(seed)
    bound = cfg.L * M
    s2 = tail_variances(p, M, cfg.L)

    ells, starts, innovations = [], [], []
    R = np.empty(size + (N + 1, M - 1))
    for m in range(1, M):
        rng = substream(ss, m)
        modes, _ = ModeIndexSets(m, M).modes(bound)
        start, innov = ou.draw_ou_inputs(p, modes, N, init, rng, size)
        ells.append(modes)
        starts.append(start)
        innovations.append(innov)
        R[..., m - 1] = rng.standard_normal(size + (N + 1,)) * math.sqrt(s2[m - 1])
    if init is InitialCondition.ZERO:
        R[..., 0, :] = 0.0

    ells = np.concatenate(ells)
    start = np.concatenate(starts, axis=-1)
    innov = np.concatenate(innovations, axis=-2)
    if N > 0:
        decay, scale = ou.ar1_coefficients(p, ells, grid.dt)
        paths = ou.ar1_filter(decay, scale, start, innov)
    else:
        paths = start[..., None]
    U = _fold(paths, _fold_matrix(ells, M)) + R
    return SampleField(
        grid=grid,
        values=synthesize(p, M, U),
        parameters=p,
        init=init,
        method="replacement",
        config=cfg.as_dict(),
        seed=_seed_info(ss),
        coefficients=U,
    )


def sample_truncation(
    p: Parameters,
    grid: Grid,
    init,
    cfg: TruncationConfig,
    seed=None,
    size=(),
) -> SampleField:
    """Truncated Fourier series ``sum_{ell <= K} u_ell(t_i) e_ell(y_k)``.

    All ``K`` modes are drawn from the single stream of ``seed`` as one
    block. On the grid ``e_ell`` equals ``+-e_m`` exactly, so the modes are
    folded onto ``U_m`` before synthesis; multiples of ``M`` vanish there and
    are still drawn to keep the stream layout independent of ``M``.
    """
    M = grid.M
    init = InitialCondition(init)
    ss = as_seed_sequence(seed)
    rng = np.random.Generator(np.random.PCG64(ss))
    ells = np.arange(1, cfg.K + 1)
    paths = ou.ou_paths(p, ells, grid, init, rng, size)
    if M >= 2:
        U = _fold(paths, _fold_matrix(ells, M))
        values = synthesize(p, M, U)
    else:
        U = None
        values = np.zeros(paths.shape[:-2] + (grid.N + 1, 2))
    return SampleField(
        grid=grid,
        values=values,
        parameters=p,
        init=init,
        method="truncation",
        config=cfg.as_dict(),
        seed=_seed_info(ss),
        coefficients=U,
    )
