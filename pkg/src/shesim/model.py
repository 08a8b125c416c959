"""Parameters, grids and spectral quantities of the stochastic heat equation

    dX_t = (theta2 X'' + theta1 X' + theta0 X) dt + sigma dW_t   on [0, 1],
    X_t(0) = X_t(1) = 0,

driven by space-time white noise. Everything here is immutable and pure.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

# |Gamma| below this is treated as the linear (Gamma = 0) branch
GAMMA_ZERO_TOL = 1e-12


class InitialCondition(str, enum.Enum):
    ZERO = "zero"
    STATIONARY = "stationary"


@dataclass(frozen=True)
class Parameters:
    """SPDE parameters ``(sigma2, theta2, theta1, theta0)``.

    Construction fails unless the tuple lies in the admissible set, i.e.
    ``sigma2 > 0``, ``theta2 > 0`` and ``theta1**2 / (4 theta2**2)
    - theta0 / theta2 + pi**2 > 0``. The derived quantities ``kappa``,
    ``gamma`` and ``gamma0`` are cached.
    """

    sigma2: float
    theta2: float
    theta1: float
    theta0: float
    kappa: float = field(init=False, repr=False)
    gamma: float = field(init=False, repr=False)
    gamma0: float = field(init=False, repr=False)

    def __post_init__(self):
        for name in ("sigma2", "theta2", "theta1", "theta0"):
            value = float(getattr(self, name))
            if not math.isfinite(value):
                raise ValueError(f"{name} must be finite, got {value!r}")
            object.__setattr__(self, name, value)
        problem = _theta_violation(self.sigma2, self.theta2, self.theta1, self.theta0)
        if problem is not None:
            raise ValueError(f"parameters outside the admissible set: {problem}")
        kappa = self.theta1 / self.theta2
        gamma = self.theta1**2 / (4.0 * self.theta2**2) - self.theta0 / self.theta2
        object.__setattr__(self, "kappa", kappa)
        object.__setattr__(self, "gamma", gamma)
        object.__setattr__(self, "gamma0", math.sqrt(abs(gamma)))

    @property
    def shift(self) -> float:
        """Constant part of the eigenvalues, ``theta1**2/(4 theta2) - theta0``."""
        return self.theta2 * self.gamma

    def as_dict(self) -> dict:
        return {
            "sigma2": self.sigma2,
            "theta2": self.theta2,
            "theta1": self.theta1,
            "theta0": self.theta0,
        }


def _theta_violation(sigma2, theta2, theta1, theta0):
    if not sigma2 > 0:
        return f"sigma2 > 0 violated (sigma2={sigma2})"
    if not theta2 > 0:
        return f"theta2 > 0 violated (theta2={theta2})"
    margin = theta1**2 / (4.0 * theta2**2) - theta0 / theta2 + math.pi**2
    if not margin > 0:
        return (
            "theta1^2/(4 theta2^2) - theta0/theta2 + pi^2 > 0 violated "
            f"(value {margin})"
        )
    return None


DEFAULT_PARAMETERS = Parameters(sigma2=0.1, theta2=0.5, theta1=-0.4, theta0=0.3)


def validate_theta(sigma2, theta2=None, theta1=None, theta0=None) -> bool:
    """True iff the tuple belongs to the admissible parameter set.

    Accepts either a :class:`Parameters` instance (always valid by
    construction) or the four raw numbers.
    """
    if isinstance(sigma2, Parameters):
        return True
    if theta2 is None:
        sigma2, theta2, theta1, theta0 = sigma2
    values = [float(v) for v in (sigma2, theta2, theta1, theta0)]
    if not all(math.isfinite(v) for v in values):
        return False
    return _theta_violation(*values) is None


@dataclass(frozen=True)
class Grid:
    """Equidistant space-time lattice ``t_i = i T / N``, ``y_k = k / M``."""

    N: int
    M: int
    T: float = 1.0

    def __post_init__(self):
        if int(self.N) != self.N or self.N < 0:
            raise ValueError(f"N must be a non-negative integer, got {self.N!r}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M!r}")
        if not (self.T > 0 and math.isfinite(self.T)):
            raise ValueError(f"T must be positive and finite, got {self.T!r}")
        object.__setattr__(self, "N", int(self.N))
        object.__setattr__(self, "M", int(self.M))
        object.__setattr__(self, "T", float(self.T))

    @property
    def dt(self) -> float:
        """Temporal mesh size (Delta)."""
        if self.N == 0:
            return math.inf
        return self.T / self.N

    @property
    def dx(self) -> float:
        """Spatial mesh size (delta)."""
        return 1.0 / self.M

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.N + 1) * self.T / self.N if self.N else np.zeros(1)

    @property
    def points(self) -> np.ndarray:
        return np.arange(self.M + 1) / self.M

    def time(self, i: int) -> float:
        return i * self.T / self.N if self.N else 0.0

    def point(self, k: int) -> float:
        return k / self.M

    @property
    def shape(self) -> tuple[int, int]:
        return (self.N + 1, self.M + 1)


def eigenvalue(p: Parameters, ell):
    """``lambda_ell = pi^2 theta2 ell^2 + theta1^2/(4 theta2) - theta0``.

    Works elementwise on arrays of mode indices.
    """
    ell = np.asarray(ell, dtype=float)
    out = math.pi**2 * p.theta2 * ell**2 + p.shift
    return float(out) if out.ndim == 0 else out


def eigenfunction(p: Parameters, ell, y):
    """``e_ell(y) = sqrt(2) sin(pi ell y) exp(-kappa y / 2)``, broadcasting."""
    ell = np.asarray(ell, dtype=float)
    y = np.asarray(y, dtype=float)
    out = math.sqrt(2.0) * _sin_pi(ell * y) * np.exp(-p.kappa * y / 2.0)
    return float(out) if out.ndim == 0 else out


def _sin_pi(x):
    # exact zeros at integers, which makes the Dirichlet boundary exact
    x = np.remainder(x, 2.0)
    return np.where(x == np.round(x), 0.0, np.sin(np.pi * x))


def grid_eigenfunctions(p: Parameters, M: int, modes=None) -> np.ndarray:
    """Matrix ``E[j, k] = e_{modes[j]}(y_k)`` on the grid ``y_k = k/M``.

    Defaults to the basis modes ``1..M-1``. The sine is evaluated through
    the integer phase ``(ell * k) mod 2M`` so that aliased modes agree with
    their representative to the last bit.
    """
    if modes is None:
        modes = np.arange(1, M)
    modes = np.asarray(modes, dtype=np.int64)
    k = np.arange(M + 1, dtype=np.int64)
    phase = np.remainder(np.multiply.outer(modes, k), 2 * M)
    y = k / M
    sines = np.where(phase % M == 0, 0.0, np.sin(np.pi * phase / M))
    return math.sqrt(2.0) * sines * np.exp(-p.kappa * y / 2.0)


def empirical_inner_product(p: Parameters, M: int, u, v) -> float:
    """Weighted grid inner product ``(1/M) sum_k u(y_k) v(y_k) exp(kappa y_k)``.

    ``u`` and ``v`` are arrays of length ``M + 1`` (values on the grid) or
    callables evaluated there. Extra leading axes are allowed and reduced
    over the last one only.
    """
    y = np.arange(M + 1) / M
    u = u(y) if callable(u) else np.asarray(u, dtype=float)
    v = v(y) if callable(v) else np.asarray(v, dtype=float)
    if u.shape[-1] != M + 1 or v.shape[-1] != M + 1:
        raise ValueError(f"grid functions must have {M + 1} values on the last axis")
    out = np.sum(u * v * np.exp(p.kappa * y), axis=-1) / M
    return float(out) if np.ndim(out) == 0 else out


def aliased_sign_and_index(ell: int, M: int) -> tuple[int, int]:
    """Representative mode ``m`` in ``[0, M]`` and sign ``s`` with
    ``e_ell(y_k) = s * e_m(y_k)`` for every grid point.

    ``s == 0`` exactly when ``ell`` is a multiple of ``M``.
    """
    if ell < 1:
        raise ValueError(f"mode index must be >= 1, got {ell}")
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    r = ell % (2 * M)
    if r == 0:
        return 0, 0
    if r == M:
        return M, 0
    if r < M:
        return r, 1
    return 2 * M - r, -1


@dataclass(frozen=True)
class ModeIndexSets:
    """The modes aliasing to ``+e_m`` (plus set) and ``-e_m`` (minus set)."""

    m: int
    M: int

    def __post_init__(self):
        if not 1 <= self.m <= self.M - 1:
            raise ValueError(f"need 1 <= m <= M-1, got m={self.m}, M={self.M}")

    def plus_set(self, bound: int) -> np.ndarray:
        """``{m + 2 j M : j >= 0}`` restricted to indices below ``bound``."""
        return np.arange(self.m, max(bound, self.m), 2 * self.M, dtype=np.int64)

    def minus_set(self, bound: int) -> np.ndarray:
        """``{2M - m + 2 j M : j >= 0}`` restricted to indices below ``bound``."""
        start = 2 * self.M - self.m
        return np.arange(start, max(bound, start), 2 * self.M, dtype=np.int64)

    def modes(self, bound: int) -> tuple[np.ndarray, np.ndarray]:
        """All indices below ``bound`` in ascending order with their signs."""
        plus = self.plus_set(bound)
        minus = self.minus_set(bound)
        modes = np.concatenate([plus, minus])
        signs = np.concatenate([np.ones(plus.size), -np.ones(minus.size)])
        order = np.argsort(modes, kind="stable")
        return modes[order], signs[order]
