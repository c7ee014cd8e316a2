"""
problem.py

The problem-instance container shared by every other module, the chain constants, and the
column normalization required by the design assumption (every column has length sqrt(n)).
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionMismatch, ZeroColumn
from .subsets import Subset

# Relative tolerance for "column has norm sqrt(n)" checks on stored instances.
NORM_RTOL = 1e-10
# Inclusive ">=" comparisons on derived thresholds tolerate this much rounding.
INCLUSIVE_RTOL = 1e-12


def normalize_columns(X):
    """Rescales every column of X to Euclidean norm sqrt(n), keeping its direction."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise DimensionMismatch(f"Design matrix must be two-dimensional, got shape {X.shape}.")
    n = X.shape[0]
    norms = np.linalg.norm(X, axis=0)
    for j, norm in enumerate(norms):
        if norm == 0.0:
            raise ZeroColumn(j)
    return X * (math.sqrt(n) / norms)


def d_choice_minimum(beta, c, L):
    """Smallest D allowed by D >= 4 + (4L + 2c)/beta."""
    return 4.0 + (4.0 * L + 2.0 * c) / beta


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class ProblemInstance:
    """
    ProblemInstance holds one sparse regression problem Y = X theta + epsilon.

    Attributes:
        X (ndarray): n x p design matrix.
        Y (ndarray): Response of length n.
        theta (ndarray): True coefficient vector of length p.
        T (Subset): Support of theta, {j : theta_j != 0}.
        s_star (int): Sparsity budget s* >= 1.
        epsilon (ndarray): Noise vector, stored so that Y = X theta + epsilon exactly.
        sigma (float): Noise scale used when the instance was generated.

    Description:
        All arrays are copied and made read-only at construction, so an instance can be
        shared freely between chains, oracle builders and worker processes. Use `build`
        to assemble an instance from (X, theta, epsilon); it computes Y and T.
    """
    X: np.ndarray
    Y: np.ndarray
    theta: np.ndarray
    T: Subset
    s_star: int
    epsilon: np.ndarray
    sigma: float = 1.0

    def __post_init__(self):
        for name in ("X", "Y", "theta", "epsilon"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        if self.X.ndim != 2:
            raise DimensionMismatch(f"Design matrix must be two-dimensional, got shape {self.X.shape}.")
        n, p = self.X.shape
        if self.Y.shape != (n,) or self.epsilon.shape != (n,):
            raise DimensionMismatch(f"Response and noise must have length n={n}.")
        if self.theta.shape != (p,):
            raise DimensionMismatch(f"Coefficient vector must have length p={p}.")
        if self.s_star < 1:
            raise ValueError(f"Sparsity budget s*={self.s_star} must be at least 1.")
        if self.sigma <= 0:
            raise ValueError(f"Noise scale sigma={self.sigma} must be positive.")
        support = Subset.from_indices(np.flatnonzero(self.theta), p)
        if support != self.T:
            raise ValueError(f"Declared support {self.T} differs from the support {support} of theta.")
        scale = max(1.0, float(np.max(np.abs(self.Y), initial=0.0)))
        if not np.allclose(self.Y, self.X @ self.theta + self.epsilon, rtol=0.0, atol=1e-12 * scale):
            raise ValueError("Stored response does not equal X theta + epsilon.")

    @classmethod
    def build(cls, X, theta, epsilon, s_star, sigma=1.0):
        X = np.asarray(X, dtype=float)
        theta = np.asarray(theta, dtype=float)
        epsilon = np.asarray(epsilon, dtype=float)
        if X.ndim != 2 or theta.shape != (X.shape[1],):
            raise DimensionMismatch(f"Shapes X{X.shape} and theta{theta.shape} do not match.")
        if epsilon.shape != (X.shape[0],):
            raise DimensionMismatch(f"Noise of shape {epsilon.shape} does not match the {X.shape[0]} rows of X.")
        Y = X @ theta + epsilon
        T = Subset.from_indices(np.flatnonzero(theta), X.shape[1])
        return cls(X=X, Y=Y, theta=theta, T=T, s_star=int(s_star), epsilon=epsilon, sigma=float(sigma))

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def p(self):
        return self.X.shape[1]

    @property
    def log_p(self):
        return math.log(self.p)

    @property
    def signal(self):
        """The noiseless mean X theta."""
        return self.X @ self.theta

    @property
    def theta_min(self):
        """min_{j in T} |theta_j|, or +inf for an empty support."""
        if self.T.size == 0:
            return math.inf
        return float(np.min(np.abs(self.theta[list(self.T.indices)])))

    def column_norms(self):
        return np.linalg.norm(self.X, axis=0)

    def is_normalized(self, rtol=NORM_RTOL):
        return bool(np.allclose(self.column_norms(), math.sqrt(self.n), rtol=rtol, atol=0.0))


@dataclass(frozen=True)
class ChainConfig:
    """
    ChainConfig holds the constants of the soft-boundary chain.

    Attributes:
        beta (float): Temperature of the aggregation weights (default 2).
        D (float): Dimension penalty multiplier.
        c (float): Initializer-risk constant of the event A_n.
        L (float): Noise-projection constant of the event E_n.
        nu (float): Restricted eigenvalue constant, in (0, 1].
        T_hat (Subset): Initializer; starting state and target of the soft-boundary jumps.
        s_star (int): Sparsity budget, mirrored from the instance.
        seed (int): Seed of the sampler stream.

    Notes:
        `auto` picks D = 4 + (4L + 2c)/beta when D is not given. An explicit D below that
        threshold is accepted with a warning and reported through `meets_D_choice`.
        An empty initializer is accepted with a warning as well.
    """
    beta: float
    D: float
    c: float
    L: float
    nu: float
    T_hat: Subset
    s_star: int
    seed: int = 0
    warn: bool = field(default=True, repr=False, compare=False)

    def __post_init__(self):
        for name in ("beta", "D", "c", "L"):
            if not getattr(self, name) > 0:
                raise ValueError(f"Chain constant {name}={getattr(self, name)} must be positive.")
        if not 0 < self.nu <= 1:
            raise ValueError(f"Chain constant nu={self.nu} must lie in (0, 1].")
        if not isinstance(self.T_hat, Subset):
            raise TypeError("T_hat must be a Subset.")
        if self.s_star < 1:
            raise ValueError(f"Sparsity budget s*={self.s_star} must be at least 1.")
        if not self.warn:
            return
        if self.T_hat.size == 0:
            warnings.warn("Initializer T_hat is the empty set; the soft-boundary jumps lose their purpose "
                          "and the spectral-gap guarantee does not apply.", stacklevel=3)
        if not self.meets_D_choice:
            warnings.warn(f"D={self.D} is below the choice 4 + (4L+2c)/beta = {self.D_minimum}; "
                          "this will be flagged in reports.", stacklevel=3)

    @classmethod
    def auto(cls, T_hat, s_star, c, L, nu, beta=2.0, D=None, seed=0, warn=True):
        if D is None:
            D = d_choice_minimum(beta, c, L)
        return cls(beta=float(beta), D=float(D), c=float(c), L=float(L), nu=float(nu),
                   T_hat=T_hat, s_star=int(s_star), seed=int(seed), warn=warn)

    @property
    def p(self):
        return self.T_hat.p

    @property
    def log_p(self):
        return math.log(self.p)

    @property
    def D_minimum(self):
        return d_choice_minimum(self.beta, self.c, self.L)

    @property
    def meets_D_choice(self):
        return self.D >= self.D_minimum * (1 - INCLUSIVE_RTOL)

    def check_compatible(self, inst):
        if self.p != inst.p:
            raise DimensionMismatch(f"Chain config has p={self.p} but the instance has p={inst.p}.")
        if self.s_star != inst.s_star:
            raise DimensionMismatch(f"Chain config has s*={self.s_star} but the instance has s*={inst.s_star}.")
