"""Exact Gaussian law of the grid observations, for validation.

Per aliased class ``m`` the coefficient process ``U_m`` is a sum of
independent OU processes, so

    Cov(U_m(t_i), U_m(t_j)) = S_m(|i - j|)                  (stationary)
                            = S_m(|i - j|) - S_m(i + j)     (zero start)

with the lag sums ``S_m(k) = sum_{ell in I_m} sigma2/(2 lambda_ell) exp(-lambda_ell k Delta)``.
The lag sums are evaluated to a cutoff with certified tail radii.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from ._streams import as_seed_sequence, substream
from .model import Grid, InitialCondition, Parameters, eigenvalue, grid_eigenfunctions
from .samplers import (
    SampleField,
    _seed_info,
    aliased_variance_closed,
    synthesize,
    tail_variance_closed,
)
from .series import EPS, progression_tail

# entrywise certified tail radius relative to the largest variance
RELATIVE_TAIL_TARGET = 1e-14
JITTER_LADDER = (0.0, 1e-15, 1e-14, 1e-13, 1e-12)
MAX_ORACLE_WORK = 10**6


class CutoffError(RuntimeError):
    """The series cutoff does not certify the requested accuracy."""


@dataclass(frozen=True)
class ModeCovariance:
    m: int
    matrix: np.ndarray
    radius: float = 0.0
    independent_variance: float | None = None

    @property
    def perp(self) -> np.ndarray:
        """Covariance of the iid stand-ins.

        The diagonal of ``matrix`` unless a common variance is recorded (zero
        start, where the stand-ins have the stationary tail variance).
        """
        if self.independent_variance is None:
            return np.diag(np.diag(self.matrix))
        return self.independent_variance * np.eye(self.matrix.shape[0])


def _lag_sums(p: Parameters, M: int, m: int, lo: int, dt: float, lags, cutoff: int):
    """``sum_{ell in I_m, ell >= lo} f_ell exp(-lambda_ell k dt)`` for each lag ``k``.

    Returns the values and a per-lag certified radius.
    """
    lags = np.asarray(lags, dtype=np.int64)
    values = np.zeros(lags.size)
    radius = np.zeros(lags.size)
    for start in (m, 2 * M - m):
        if start < lo:
            start += 2 * M * (-(-(lo - start) // (2 * M)))
        first_tail = start if cutoff <= start else start + 2 * M * (-(-(cutoff - start) // (2 * M)))
        ell = np.arange(start, first_tail, 2 * M, dtype=float)
        lam = eigenvalue(p, ell) if ell.size else np.zeros(0)
        f = p.sigma2 / (2.0 * lam)
        tail = progression_tail(p, first_tail, 2 * M)
        lam_tail = eigenvalue(p, first_tail)
        for idx, k in enumerate(lags.tolist()):
            if k == 0:
                head = math.fsum(f)
                values[idx] += head + tail.value
                radius[idx] += tail.radius + 4 * EPS * head
            else:
                head = math.fsum(f * np.exp(-lam * k * dt)) if k * dt != math.inf else 0.0
                values[idx] += head
                # the whole tail is damped at least by the first tail eigenvalue
                damp = math.exp(-lam_tail * k * dt) if math.isfinite(dt) else 0.0
                radius[idx] += tail.upper * damp + 4 * EPS * head
    return values, radius


def _default_cutoff(p: Parameters, grid: Grid, m: int) -> int:
    # diagonal tail bracket width ~ M m^2 / u^3 relative
    M = grid.M
    u = (M * max(m, 1) ** 2 / RELATIVE_TAIL_TARGET) ** (1.0 / 3.0) * 4.0
    return int(max(u, 64 * M))


def _assemble(values, N, init):
    i = np.arange(N + 1)
    lag = np.abs(i[:, None] - i[None, :])
    out = values[lag]
    if init is InitialCondition.ZERO:
        out = out - values[i[:, None] + i[None, :]]
        out[0, :] = 0.0
        out[:, 0] = 0.0
    return out


def _mode_covariance(p, grid, init, m, lo, cutoff, check=True):
    init = InitialCondition(init)
    M, N = grid.M, grid.N
    if not 1 <= m <= M - 1:
        raise ValueError(f"need 1 <= m <= M-1, got m={m}, M={M}")
    if cutoff is None:
        cutoff = _default_cutoff(p, grid, m)
    lags = np.arange(2 * N + 1 if init is InitialCondition.ZERO else N + 1)
    values, radius = _lag_sums(p, M, m, lo, grid.dt, lags, cutoff)
    matrix = _assemble(values, N, init)
    rad = float(radius.max() if init is InitialCondition.STATIONARY else 2 * radius.max())
    scale = values[0]
    if check and scale > 0 and rad > RELATIVE_TAIL_TARGET * scale:
        raise CutoffError(
            f"cutoff {cutoff} certifies only {rad / scale:.3e} relative accuracy "
            f"(target {RELATIVE_TAIL_TARGET:.0e}) for mode class m={m}"
        )
    return ModeCovariance(m, matrix, rad)


def mode_covariance_true(p: Parameters, grid: Grid, init, m: int, cutoff: int | None = None) -> ModeCovariance:
    """``Cov(U_m(t_i), U_m(t_j))`` of the exact solution.

    Raises :class:`CutoffError` when the series cutoff cannot certify the
    entries to ``1e-14`` relative to the largest variance.
    """
    return _mode_covariance(p, grid, init, m, 1, cutoff)


def tail_covariance(p: Parameters, grid: Grid, init, m: int, L: int, cutoff: int | None = None) -> ModeCovariance:
    """Covariance of the replaced part ``V_m = sum_{ell in I_m, ell >= L M} +-u_ell``.

    For a zero start the deterministic ``t_0`` row and column are dropped,
    leaving an ``N x N`` block.
    """
    cov = _mode_covariance(p, grid, init, m, L * grid.M, cutoff, check=False)
    if InitialCondition(init) is InitialCondition.ZERO:
        stationary = _mode_covariance(p, grid, InitialCondition.STATIONARY, m, L * grid.M, cutoff, check=False)
        return ModeCovariance(m, cov.matrix[1:, 1:], cov.radius, float(stationary.matrix[0, 0]))
    return cov


def mode_covariance_replacement(
    p: Parameters, grid: Grid, init, m: int, L: int, cutoff: int | None = None
) -> ModeCovariance:
    """Covariance of ``U_m^L`` produced by the replacement sampler.

    Simulated modes contribute their exact covariance, the replacement
    variables contribute ``s_m^2`` on the diagonal (except ``t_0`` for a zero
    start).
    """
    init = InitialCondition(init)
    M, N = grid.M, grid.N
    lags = np.arange(2 * N + 1 if init is InitialCondition.ZERO else N + 1)
    # simulated part: the finite sum over ell < L M, no tail
    values = np.zeros(lags.size)
    bound = L * M
    for start in (m, 2 * M - m):
        ell = np.arange(start, bound, 2 * M, dtype=float)
        if ell.size == 0:
            continue
        lam = eigenvalue(p, ell)
        f = p.sigma2 / (2.0 * lam)
        for idx, k in enumerate(lags.tolist()):
            values[idx] += math.fsum(f * np.exp(-lam * k * grid.dt)) if k else math.fsum(f)
    matrix = _assemble(values, N, init)
    s2 = tail_variance_closed(p, M, m, L)
    diag = np.full(N + 1, s2)
    if init is InitialCondition.ZERO:
        diag[0] = 0.0
    return ModeCovariance(m, matrix + np.diag(diag))


def stationary_diagonal_closed(p: Parameters, M: int, m: int) -> float:
    """Closed-form stationary variance of ``U_m`` through the kernel ``rho``."""
    return aliased_variance_closed(p, M, m)


def field_covariance(p: Parameters, grid: Grid, mode_covs) -> np.ndarray:
    """Covariance of the flattened field ``X(t_i, y_k)`` (row-major in ``(i, k)``).

    Classes are independent, so ``Cov = sum_m Xi_m (x) e_m e_m^T``.
    """
    E = grid_eigenfunctions(p, grid.M)
    n = (grid.N + 1) * (grid.M + 1)
    out = np.zeros((n, n))
    for cov in mode_covs:
        e = E[cov.m - 1]
        out += np.kron(cov.matrix, np.outer(e, e))
    return out


def _cholesky(matrix):
    for jitter in JITTER_LADDER:
        try:
            factor = np.linalg.cholesky(matrix + jitter * np.eye(matrix.shape[0]))
            return factor, jitter
        except np.linalg.LinAlgError:
            continue
    raise np.linalg.LinAlgError(
        f"covariance not positive definite after jitter {JITTER_LADDER[-1]:.0e}"
    )


def exact_sample(
    p: Parameters,
    grid: Grid,
    init,
    cutoff: int | None = None,
    seed=None,
    size=(),
    max_work: int = MAX_ORACLE_WORK,
) -> SampleField:
    """Sample the grid field exactly through per-class Cholesky factors.

    Class ``m`` draws ``N + 1`` normals (``N`` for a zero start) from the
    substream keyed by ``m``.
    """
    init = InitialCondition(init)
    M, N = grid.M, grid.N
    if M < 2:
        raise ValueError(f"oracle sampling needs M >= 2, got M={M}")
    if (M - 1) * (N + 1) > max_work:
        raise ValueError(
            f"oracle refuses (M-1)(N+1) = {(M - 1) * (N + 1)} > {max_work}; raise max_work to override"
        )
    size = (int(size),) if np.isscalar(size) else tuple(size)
    ss = as_seed_sequence(seed)
    U = np.zeros(size + (N + 1, M - 1))
    jitters = []
    first = 1 if init is InitialCondition.ZERO else 0
    for m in range(1, M):
        cov = mode_covariance_true(p, grid, init, m, cutoff).matrix[first:, first:]
        factor, jitter = _cholesky(cov)
        jitters.append(jitter)
        z = substream(ss, m).standard_normal(size + (N + 1 - first,))
        U[..., first:, m - 1] = z @ factor.T
    return SampleField(
        grid=grid,
        values=synthesize(p, M, U),
        parameters=p,
        init=init,
        method="oracle",
        config={"method": "oracle", "cutoff": cutoff, "max_jitter": max(jitters)},
        seed=_seed_info(ss),
        coefficients=U,
    )


def _frobenius(a):
    # scaled to survive entries near the underflow threshold
    s = np.max(np.abs(a)) if a.size else 0.0
    if s == 0.0:
        return 0.0
    return float(s * np.sqrt(np.sum((a / s) ** 2)))


def tv_frobenius_bound(A, B) -> float:
    """Upper bound ``1.5 ||A^{-1}(B - A)||_F`` on ``TV(N(0, A), N(0, B))``.

    Raises ``LinAlgError`` when ``A`` is singular or not positive definite.
    """
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError("A and B must be square matrices of the same size")
    factor = scipy.linalg.cho_factor(A)
    return 1.5 * _frobenius(scipy.linalg.cho_solve(factor, B - A))


def tail_tv_bound(p: Parameters, grid: Grid, init, L: int, m: int | None = None, cutoff=None) -> float:
    """Frobenius TV bound between the replaced tails and their iid stand-ins.

    With ``m`` given, the bound for that class only; otherwise the aggregate
    over all classes (square root of the sum of squares).
    """
    classes = [m] if m is not None else range(1, grid.M)
    bounds = []
    for c in classes:
        cov = tail_covariance(p, grid, init, c, L, cutoff)
        bounds.append(tv_frobenius_bound(cov.perp, cov.matrix))
    # hypot rescales, so squares of ~1e-290 bounds do not underflow
    return math.hypot(*bounds)
