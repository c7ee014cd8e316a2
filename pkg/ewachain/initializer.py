"""
initializer.py

The thresholded lasso initializer T_hat.

The lasso objective is taken without rescaling,

    theta_hat = argmin_t ||Y - X t||^2 + alpha * lambda_n * ||t||_1,   lambda_n = sqrt(log p / n),

solved by cyclic (ascending index) coordinate descent with active-set sweeps, a maximum
coordinate change criterion and a duality-gap certificate. T_hat keeps the coordinates with
|theta_hat_j| > 8 alpha lambda_n / kappa^2.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NoConvergence, ZeroColumn
from .projection import ProjectionState, restricted_lambda_max
from .subsets import Subset


@dataclass(frozen=True)
class LassoConfig:
    """
    LassoConfig holds the initializer constants.

    Attributes:
        alpha (float): Penalty multiplier; the bounds hold with probability 1 - p^(1 - alpha^2/32).
        kappa (float): Restricted eigenvalue constant kappa(s*, 3), user supplied or estimated.
        max_iter (int): Maximum number of coordinate-descent sweeps.
        tol (float): Convergence tolerance on coordinate changes; the duality gap is held to
            tol * max(1, ||Y||^2).
    """
    alpha: float
    kappa: float
    max_iter: int = 10000
    tol: float = 1e-10

    def __post_init__(self):
        if not self.alpha > 0:
            raise ValueError(f"alpha={self.alpha} must be positive.")
        if not self.kappa > 0:
            raise ValueError(f"kappa={self.kappa} must be positive.")
        if self.max_iter < 1 or not self.tol > 0:
            raise ValueError("max_iter must be at least 1 and tol must be positive.")

    @staticmethod
    def lambda_n(p, n):
        return math.sqrt(math.log(p) / n)

    def penalty(self, p, n):
        return self.alpha * self.lambda_n(p, n)

    def threshold(self, p, n):
        return 8.0 * self.alpha * self.lambda_n(p, n) / self.kappa**2


def _soft(value, level):
    return math.copysign(max(abs(value) - level, 0.0), value)


def duality_gap(X, Y, theta, penalty):
    """Gap between the objective at theta and the dual value at the rescaled residual."""
    r = Y - X @ theta
    corr = float(np.max(np.abs(X.T @ r), initial=0.0))
    scale = 1.0 if corr <= penalty / 2 else (penalty / 2) / corr
    u = scale * r
    primal = float(r @ r) + penalty * float(np.sum(np.abs(theta)))
    dual = float(Y @ Y) - float((Y - u) @ (Y - u))
    return primal - dual


def kkt_residual(X, Y, theta, penalty):
    """Largest violation of the subgradient optimality conditions of the lasso objective."""
    grad = 2.0 * X.T @ (X @ theta - Y)
    active = theta != 0
    violation = np.where(active, np.abs(grad + penalty * np.sign(theta)), np.maximum(np.abs(grad) - penalty, 0.0))
    return float(np.max(violation, initial=0.0))


def fit_lasso(inst, lcfg):
    """Coordinate-descent lasso fit; raises NoConvergence with the last iterate attached."""
    X, Y = inst.X, inst.Y
    n, p = X.shape
    penalty = lcfg.penalty(p, n)
    col_sq = np.einsum("ij,ij->j", X, X)
    for j in np.flatnonzero(col_sq == 0):
        raise ZeroColumn(int(j))

    theta = np.zeros(p)
    r = Y.astype(float).copy()
    gap_tol = lcfg.tol * max(1.0, float(Y @ Y))

    def sweep(coords):
        largest = 0.0
        for j in coords:
            old = theta[j]
            new = _soft(float(X[:, j] @ r) + col_sq[j] * old, penalty / 2) / col_sq[j]
            if new != old:
                np.subtract(r, X[:, j] * (new - old), out=r)
                theta[j] = new
            largest = max(largest, abs(new - old))
        return largest

    full = True
    for _ in range(lcfg.max_iter):
        coords = range(p) if full else np.flatnonzero(theta)
        if sweep(coords) < lcfg.tol:
            if full and duality_gap(X, Y, theta, penalty) <= gap_tol:
                return theta
            full = True
        else:
            full = False
    raise NoConvergence(lcfg.max_iter, theta.copy())


def threshold_support(theta_hat, lcfg, p, n):
    """Indices with |theta_hat_j| strictly above 8 alpha lambda_n / kappa^2."""
    level = lcfg.threshold(p, n)
    return Subset.from_indices(np.flatnonzero(np.abs(np.asarray(theta_hat)) > level), p)


@dataclass(frozen=True)
class EventA:
    """The initializer event: |T_hat| <= 2 s* and ||(I - Phi_T_hat) X theta||^2 <= c s* log p."""
    size: int
    size_limit: int
    risk: float
    risk_limit: float

    @property
    def holds(self):
        return self.size <= self.size_limit and self.risk <= self.risk_limit

    def __bool__(self):
        return self.holds


def check_event_A(T_hat, inst, c):
    residual = ProjectionState.from_subset(inst.X, T_hat).residual(inst.signal)
    return EventA(size=T_hat.size, size_limit=2 * inst.s_star,
                  risk=float(residual @ residual), risk_limit=c * inst.s_star * inst.log_p)


def lambda_max_restricted(X, s_star):
    """Lambda_max = max over |S| <= s* of lambda_max(X_S^T X_S / n)."""
    return restricted_lambda_max(X, s_star)


def estimate_kappa(X, s_star, samples, rng):
    """
    Monte Carlo estimate of kappa(s*, 3): the running minimum of ||X delta|| / (sqrt(n) ||delta_T'||)
    over sampled supports |T'| <= s* and cone directions ||delta_T'^c||_1 <= 3 ||delta_T'||_1.

    Each sample draws delta_T' at random and one off-support part out of: none, a random
    direction at a random l1 radius inside the cone, or the least-squares cancellation of
    X_T' delta_T' pulled back into the cone. Being a minimum over feasible points, the
    result can only overestimate the true constant.
    """
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    root_n = math.sqrt(n)
    best = math.inf
    for _ in range(samples):
        size = int(rng.integers(1, min(s_star, p) + 1))
        support = np.sort(rng.choice(p, size=size, replace=False))
        rest = np.setdiff1d(np.arange(p), support)
        delta = np.zeros(p)
        delta[support] = rng.standard_normal(size)
        budget = 3.0 * float(np.sum(np.abs(delta[support])))
        if rest.size:
            mode = int(rng.integers(3))
            if mode == 1:
                direction = rng.standard_normal(rest.size)
                delta[rest] = direction * (rng.random() * budget / float(np.sum(np.abs(direction))))
            elif mode == 2:
                v = np.linalg.lstsq(X[:, rest], -X[:, support] @ delta[support], rcond=None)[0]
                l1 = float(np.sum(np.abs(v)))
                delta[rest] = v if l1 <= budget else v * (budget / l1)
        ratio = float(np.linalg.norm(X @ delta)) / (root_n * float(np.linalg.norm(delta[support])))
        best = min(best, ratio)
    return best


def initializer_report(inst, lcfg, theta_hat, T_hat, c):
    """Structured record of the fit, the support and the event-A verdict with its bounds."""
    n, p = inst.n, inst.p
    penalty = lcfg.penalty(p, n)
    delta = np.asarray(theta_hat) - inst.theta
    lam = lcfg.lambda_n(p, n)
    T_idx = list(inst.T.indices)
    event = check_event_A(T_hat, inst, c)
    lam_max = lambda_max_restricted(inst.X, inst.s_star)
    return {
        "theta_hat_nonzero": int(np.count_nonzero(theta_hat)),
        "theta_hat_max_abs": float(np.max(np.abs(theta_hat), initial=0.0)),
        "threshold": lcfg.threshold(p, n),
        "T_hat": T_hat.hex(),
        "T_hat_members": list(T_hat.indices),
        "kkt_residual": kkt_residual(inst.X, inst.Y, np.asarray(theta_hat), penalty),
        "duality_gap": duality_gap(inst.X, inst.Y, np.asarray(theta_hat), penalty),
        "delta_l1": float(np.sum(np.abs(delta))),
        "delta_l1_bound": 8.0 * lcfg.alpha * lam * inst.s_star / lcfg.kappa**2,
        "delta_T_l2": float(np.linalg.norm(delta[T_idx])) if T_idx else 0.0,
        "delta_T_l2_bound": 2.0 * lcfg.alpha * lam * math.sqrt(inst.s_star) / lcfg.kappa**2,
        "risk": math.sqrt(event.risk),
        "risk_bound": 2.0 * lcfg.alpha * math.sqrt(lam_max * inst.s_star * inst.log_p) / lcfg.kappa**2,
        "lambda_max": lam_max,
        "event_A": {"holds": event.holds, "size": event.size, "size_limit": event.size_limit,
                    "risk_sq": event.risk, "risk_sq_limit": event.risk_limit},
    }
