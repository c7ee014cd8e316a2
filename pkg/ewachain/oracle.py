"""
oracle.py

Exact analysis of the chain for small p: dense proposal and transition matrices over all 2^p
states, the spectrum through the pi-symmetrized kernel, total-variation decay, mixing times,
and the data-dependent good events and design assumptions the bounds are conditioned on.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg
from scipy.special import gammaln, logsumexp

from .errors import EnumerationTooLarge, OracleInvariantError, StateSpaceTooLarge
from .initializer import check_event_A
from .posterior import DEFAULT_ORACLE_CAP, Posterior, exp_or_inf
from .problem import INCLUSIVE_RTOL
from .projection import DEFAULT_SUPPORT_CAP, ProjectionState, restricted_nu
from .proposal import big_jump_sizes
from .subsets import Subset, enumerate_states

STATIONARITY_TOL = 1e-10
DEFAULT_TV_STEP_CAP = 20000
TV_ATOL = 1e-10


def _popcounts(p):
    bits = np.arange(2**p)
    sizes = np.zeros(2**p, dtype=int)
    for j in range(p):
        sizes += (bits >> j) & 1
    return sizes


def proposal_matrix(p, s_star, T_hat):
    """Dense R over all 2^p states, row and column i being the state with bit pattern i."""
    N = 2**p
    bits = np.arange(N)
    sizes = _popcounts(p)
    t = T_hat.bits
    jump_sizes = big_jump_sizes(p, s_star)
    outside = sizes > 3 * s_star

    flip = np.where(outside, 1.0 / (2 * p), 1.0 / p)
    flip[t] = 1.0 / (2 * p) if len(jump_sizes) > 0 else 1.0 / p
    R = np.zeros((N, N))
    for j in range(p):
        R[bits, bits ^ (1 << j)] += flip
    jumpers = np.flatnonzero(outside)
    jumpers = jumpers[jumpers != t]
    R[jumpers, t] += 0.5
    if len(jump_sizes) > 0:
        log_comb = gammaln(p + 1) - gammaln(sizes + 1) - gammaln(p - sizes + 1)
        mass = np.where(sizes > 3 * s_star, 0.5 / len(jump_sizes) * np.exp(-log_comb), 0.0)
        R[t, :] += mass
    return R


class ExactChain:
    """
    ExactChain holds the dense kernels of one (instance, chain config) pair.

    Attributes:
        states (list): All 2^p subsets in ascending bit order; index i is the state with bits i.
        log_pi (ndarray): Exact normalized log pi.
        R (ndarray): Proposal matrix.
        P (ndarray): Metropolis-Hastings transition matrix.
        log_Q (ndarray): log pi(S) P(S, S') off the diagonal, symmetric; -inf where no move exists.

    Description:
        Off-diagonal entries are formed as P(S, S') = exp(log Q(S, S') - log pi(S)) with
        log Q = min{log pi(S) + log R(S, S'), log pi(S') + log R(S', S)}, which is the acceptance
        rule rewritten in the log domain; diagonals complete the rows to one. The spectrum is
        computed on the symmetric matrix exp(log Q - (log pi(S) + log pi(S'))/2) with P's
        diagonal, which is similar to P because P is reversible.
    """

    def __init__(self, states, log_pi, R, P, log_Q):
        self.states = states
        self.log_pi = log_pi
        self.R = R
        self.P = P
        self.log_Q = log_Q
        self._P_lazy = None
        self._eigenvalues = None

    @property
    def N(self):
        return len(self.states)

    @property
    def p(self):
        return self.states[0].p

    @property
    def pi(self):
        return np.exp(self.log_pi)

    @property
    def P_lazy(self):
        if self._P_lazy is None:
            self._P_lazy = 0.5 * (np.eye(self.N) + self.P)
        return self._P_lazy

    def symmetrized(self):
        half = 0.5 * self.log_pi
        with np.errstate(invalid="ignore"):
            A = np.exp(self.log_Q - half[:, None] - half[None, :])
        np.fill_diagonal(A, np.diag(self.P))
        return A

    @property
    def eigenvalues(self):
        """Spectrum of P in descending order."""
        if self._eigenvalues is None:
            values = scipy.linalg.eigh(self.symmetrized(), eigvals_only=True)
            self._eigenvalues = np.sort(values)[::-1]
        return self._eigenvalues

    def nonsymmetric_eigenvalues(self):
        values = scipy.linalg.eigvals(self.P)
        return np.sort(values.real)[::-1]

    def detailed_balance_error(self):
        flow = self.pi[:, None] * self.P
        return float(np.max(np.abs(flow - flow.T)))

    def stationarity_error(self):
        pi = self.pi
        return float(np.sum(np.abs(pi @ self.P - pi)))

    def row_sum_error(self):
        return float(np.max(np.abs(self.P.sum(axis=1) - 1.0)))


def build_exact_chain(inst, cfg, cap=DEFAULT_ORACLE_CAP, table=None):
    """Dense kernels for all 2^p states; raises StateSpaceTooLarge above `cap` states."""
    cfg.check_compatible(inst)
    p = inst.p
    if 2**p > cap:
        raise StateSpaceTooLarge(p, cap)
    if table is None:
        table = Posterior(inst, cfg).table(cap=cap)
    log_pi = np.array(table.log_pi)

    R = proposal_matrix(p, inst.s_star, cfg.T_hat)
    with np.errstate(divide="ignore"):
        log_R = np.log(R)
    forward = log_pi[:, None] + log_R
    log_Q = np.minimum(forward, forward.T)
    np.fill_diagonal(log_Q, -np.inf)
    P = np.exp(log_Q - log_pi[:, None])
    np.fill_diagonal(P, 0.0)
    np.fill_diagonal(P, 1.0 - P.sum(axis=1))

    chain = ExactChain(list(enumerate_states(p)), log_pi, R, P, log_Q)
    error = chain.stationarity_error()
    if error > STATIONARITY_TOL:
        raise OracleInvariantError(f"pi P differs from pi by {error:.3g} in l1; expected at most {STATIONARITY_TOL}.")
    return chain


def spectral_gap(chain, lazy=False):
    """1 - lambda_2 of P, or of the lazy kernel (I + P)/2 when `lazy` is set."""
    gap = 1.0 - float(chain.eigenvalues[1])
    return gap / 2 if lazy else gap


def log_inverse_gap(chain):
    """-log gap(P); inf when the computed gap is not positive."""
    gap = spectral_gap(chain)
    return -math.log(gap) if gap > 0 else math.inf


def second_largest_modulus(chain):
    """max(|lambda_2|, |lambda_N|), the contraction rate of the non-lazy chain."""
    values = chain.eigenvalues
    return max(abs(float(values[1])), abs(float(values[-1])))


def tv_decay(chain, start, k_max, lazy=True):
    """Exact total variation distance to pi after k = 0..k_max steps from `start`."""
    kernel = chain.P_lazy if lazy else chain.P
    pi = chain.pi
    row = np.zeros(chain.N)
    row[start.bits] = 1.0
    curve = [(0, 0.5 * float(np.sum(np.abs(row - pi))))]
    for k in range(1, k_max + 1):
        row = row @ kernel
        curve.append((k, 0.5 * float(np.sum(np.abs(row - pi)))))
    return curve


def log_tv_bound(chain, start, k, lazy=True):
    """
    log of the spectral bound on the TV distance after k steps from `start`:
    lazy chain 1/2 pi(start)^(-1/2) exp(-k gap/2); non-lazy chain 1/2 pi(start)^(-1/2) b^k
    with b = max(|lambda_2|, |lambda_N|).
    """
    base = -math.log(2.0) - 0.5 * float(chain.log_pi[start.bits])
    if lazy:
        return base - k * spectral_gap(chain) / 2
    modulus = second_largest_modulus(chain)
    return base + (k * math.log(modulus) if modulus > 0 else (-math.inf if k else 0.0))


def tv_bound(chain, start, k, lazy=True):
    return exp_or_inf(log_tv_bound(chain, start, k, lazy=lazy))


def tv_bound_violations(chain, start, curve, lazy=True):
    """Steps of a TV curve lying above the bound, up to TV_ATOL of accumulated rounding."""
    above = []
    for k, tv in curve:
        log_bound = log_tv_bound(chain, start, k, lazy=lazy)
        # TV never exceeds 1, so only bounds below 1 can be violated
        if log_bound < 0 and tv > math.exp(log_bound) * (1 + 1e-9) + TV_ATOL:
            above.append(k)
    return above


@dataclass(frozen=True)
class MixingTime:
    """
    Exact and bounded epsilon-mixing times from one start state.

    `exact` is None when the TV distance did not drop below eps within the step cap, which
    can only happen when the analytic bound itself exceeds the cap.
    """
    eps: float
    exact: Optional[int]
    analytic: float
    theorem: float
    log_inv_pi: float
    log_inv_pi_bound: float

    @property
    def exact_within_analytic(self):
        return self.exact is not None and self.exact <= self.analytic_steps

    @property
    def analytic_steps(self):
        return math.ceil(self.analytic) if math.isfinite(self.analytic) else math.inf

    @property
    def analytic_within_theorem(self):
        return self.analytic <= self.theorem


def log_inv_pi_hat_bound(p, s_star, D, beta, c):
    """log(1/pi(T_hat)) <= C s* log p + log sum_k C(p,k) exp(-D k log p / 2), C = 2D + 4/beta + 2c/beta."""
    C = 2 * D + 4 / beta + 2 * c / beta
    k = np.arange(p + 1)
    log_comb = gammaln(p + 1) - gammaln(k + 1) - gammaln(p - k + 1)
    return C * s_star * math.log(p) + float(logsumexp(log_comb - 0.5 * D * k * math.log(p)))


def mixing_time(chain, start, eps, cfg, step_cap=DEFAULT_TV_STEP_CAP):
    """
    Smallest k with lazy-chain TV distance <= eps from `start`, next to the spectral bound
    (2 log(1/2eps) + log(1/pi(start)))/gap and the 120 p s* (log(1/2eps) + 2 D s* log p) bound.
    """
    if not 0 < eps < 1:
        raise ValueError(f"eps={eps} must lie in (0, 1).")
    p, s_star = chain.p, cfg.s_star
    gap = spectral_gap(chain)
    log_inv_pi = -float(chain.log_pi[start.bits])
    analytic = (2 * math.log(1 / (2 * eps)) + log_inv_pi) / gap if gap > 0 else math.inf
    theorem = 120 * p * s_star * (math.log(1 / (2 * eps)) + 2 * cfg.D * s_star * math.log(p))

    limit = step_cap if analytic >= step_cap else max(math.ceil(analytic), 0)
    pi = chain.pi
    kernel = chain.P_lazy
    row = np.zeros(chain.N)
    row[start.bits] = 1.0
    exact = None
    for k in range(limit + 1):
        if k:
            row = row @ kernel
        if 0.5 * float(np.sum(np.abs(row - pi))) <= eps:
            exact = k
            break
    if exact is None and limit < step_cap:
        raise OracleInvariantError(f"TV distance from {start} is above eps={eps} at the analytic bound {analytic:.6g}.")
    return MixingTime(eps=eps, exact=exact, analytic=analytic, theorem=theorem, log_inv_pi=log_inv_pi,
                      log_inv_pi_bound=log_inv_pi_hat_bound(p, s_star, cfg.D, cfg.beta, cfg.c))


@dataclass(frozen=True)
class EventReport:
    """
    Verdicts of the good events with their measured quantities.

    margins maps each quantity to {"measured": ..., "threshold": ...}. smallest_L is the least
    L for which the noise-projection event would hold with the configured nu.
    """
    A_n: bool
    E_n: bool
    F_n: bool
    margins: dict
    smallest_L: float

    @property
    def H_n(self):
        return self.A_n and self.E_n and self.F_n


def noise_projection_max(X, epsilon, size_limit, cap=DEFAULT_SUPPORT_CAP):
    """max over |S| < size_limit and j not in S of <(I - Phi_S) X_j, epsilon>^2."""
    p = np.shape(X)[1]
    top = min(size_limit - 1, p - 1)
    count = sum(math.comb(p, k) for k in range(top + 1))
    if count > cap:
        raise EnumerationTooLarge(f"supports of size below {size_limit}", count, cap)
    X, eps = np.asarray(X, dtype=float), np.asarray(epsilon, dtype=float)
    largest = 0.0
    for k in range(top + 1):
        for combo in itertools.combinations(range(p), k):
            S = Subset.from_indices(combo, p)
            r = ProjectionState.from_subset(X, S).residual(eps)
            rest = [j for j in range(p) if j not in S]
            largest = max(largest, float(np.max((X[:, rest].T @ r) ** 2)))
    return largest


def check_events(inst, cfg, cap=DEFAULT_SUPPORT_CAP):
    """Initializer event, noise-projection event over |S| < 6 s*, and ||epsilon||^2 <= 2n."""
    cfg.check_compatible(inst)
    n, log_p = inst.n, inst.log_p
    event_a = check_event_A(cfg.T_hat, inst, cfg.c)
    projection = noise_projection_max(inst.X, inst.epsilon, 6 * inst.s_star, cap=cap)
    e_limit = n * cfg.L * cfg.nu * log_p
    noise = float(inst.epsilon @ inst.epsilon)
    margins = {
        "T_hat_size": {"measured": event_a.size, "threshold": event_a.size_limit},
        "initializer_risk": {"measured": event_a.risk, "threshold": event_a.risk_limit},
        "noise_projection": {"measured": projection, "threshold": e_limit},
        "noise_norm": {"measured": noise, "threshold": 2.0 * n},
    }
    return EventReport(A_n=event_a.holds, E_n=projection <= e_limit, F_n=noise <= 2.0 * n, margins=margins,
                       smallest_L=projection / (n * cfg.nu * log_p) if log_p > 0 else math.inf)


@dataclass(frozen=True)
class AssumptionReport:
    """
    Design and signal assumptions: the restricted eigenvalue floor over |S| <= 6 s*, the
    column normalization, the signal-strength floor and the choice of D.
    """
    nu_measured: float
    nu: float
    normalized: bool
    theta_min_sq: float
    theta_min_sq_threshold: float
    D: float
    D_minimum: float

    @property
    def nu_holds(self):
        return self.nu_measured >= self.nu * (1 - INCLUSIVE_RTOL)

    @property
    def signal_holds(self):
        return self.theta_min_sq >= self.theta_min_sq_threshold * (1 - INCLUSIVE_RTOL)

    @property
    def D_holds(self):
        return self.D >= self.D_minimum * (1 - INCLUSIVE_RTOL)

    @property
    def passed(self):
        return self.nu_holds and self.normalized and self.signal_holds and self.D_holds


def signal_threshold(beta, D, p, n, nu):
    """8 beta D log p / (n nu^2), the floor on min_{j in T} theta_j^2."""
    return 8.0 * beta * D * math.log(p) / (n * nu**2)


def check_assumptions(inst, cfg, cap=DEFAULT_SUPPORT_CAP):
    cfg.check_compatible(inst)
    return AssumptionReport(
        nu_measured=restricted_nu(inst.X, 6 * inst.s_star, cap=cap),
        nu=cfg.nu,
        normalized=inst.is_normalized(),
        theta_min_sq=inst.theta_min**2,
        theta_min_sq_threshold=signal_threshold(cfg.beta, cfg.D, inst.p, inst.n, cfg.nu),
        D=cfg.D,
        D_minimum=cfg.D_minimum,
    )
