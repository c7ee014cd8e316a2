"""
posterior.py

Unnormalized log-weights of the aggregation distribution

    pi(S) = exp(G(S, Y) - m(S)) / Z(Y),
    G(S, Y) = ||Phi_S Y||^2 / beta,
    m(S)    = D |S| log p + 2 trace(Phi_S) / beta + (4n / beta) 1{|S| > 4 s*},

exact log-ratios between states, and the exact normalized table over {0,1}^p for small p.
Natural logarithms are used throughout. trace(Phi_S) is the rank of X_S.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp

from .projection import ProjectionState
from .subsets import DEFAULT_ENUMERATION_CAP, enumerate_states

DEFAULT_ORACLE_CAP = 2**12


def exp_or_inf(log_value):
    """exp of a log quantity, or inf where the float range ends."""
    try:
        return math.exp(log_value)
    except OverflowError:
        return math.inf


@dataclass(frozen=True)
class LogWeight:
    g: float
    m: float
    rank: int

    @property
    def log_w(self):
        return self.g - self.m


class Posterior:
    """
    Posterior evaluates log pi(S) up to the normalizer for one (instance, chain config) pair.

    Attributes:
        inst (ProblemInstance): The regression problem.
        cfg (ChainConfig): Chain constants (beta, D, s*).
        _states (dict): ProjectionState per visited subset, keyed by Subset.
        _weights (dict): LogWeight per visited subset.

    Description:
        Weights are memoized per subset. When a Hamming-1 neighbour of an already evaluated
        subset is requested, its projection is obtained with a single add/remove-column update
        of the cached state instead of a rebuild, which is what makes the sampler loop cheap.

    Usage:
        post = Posterior(inst, cfg)
        post.log_weight(S).log_w
        post.log_ratio(S, S2)
    """

    def __init__(self, inst, cfg):
        cfg.check_compatible(inst)
        self.inst = inst
        self.cfg = cfg
        self._states = {}
        self._weights = {}
        if inst.p == 1:
            warnings.warn("p=1 makes the D log p penalty vanish; this is outside the regime the "
                          "spectral-gap theorem addresses.", stacklevel=2)

    def _penalty(self, size, rank):
        inst, cfg = self.inst, self.cfg
        m = cfg.D * size * math.log(inst.p) + 2.0 * rank / cfg.beta
        if size > 4 * inst.s_star:
            m += 4.0 * inst.n / cfg.beta
        return m

    def _weight_from_state(self, S, state):
        g = state.project_sq_norm(self.inst.Y) / self.cfg.beta
        return LogWeight(g=g, m=self._penalty(S.size, state.rank), rank=state.rank)

    def state(self, S):
        state = self._states.get(S)
        if state is None:
            state = ProjectionState.from_subset(self.inst.X, S)
            self._states[S] = state
        return state

    def log_weight(self, S):
        weight = self._weights.get(S)
        if weight is None:
            weight = self._weight_from_state(S, self.state(S))
            self._weights[S] = weight
        return weight

    def _neighbour_weight(self, S, S2):
        """Weight of S2 = S +/- k from the cached state of S with one column update."""
        k = (S.bits ^ S2.bits).bit_length() - 1
        base = self.state(S)
        if k in S:
            state = base.remove_column(k)
        else:
            state = base.add_column(k)[0]
        self._states[S2] = state
        weight = self._weight_from_state(S2, state)
        self._weights[S2] = weight
        return weight

    def log_ratio(self, S, S2):
        """log pi(S2) - log pi(S); the normalizer cancels."""
        if S == S2:
            return 0.0
        first = self.log_weight(S)
        second = self._weights.get(S2)
        if second is None:
            second = self._neighbour_weight(S, S2) if S.hamming(S2) == 1 else self.log_weight(S2)
        return second.log_w - first.log_w

    def table(self, cap=DEFAULT_ORACLE_CAP):
        return PosteriorTable.from_posterior(self, cap=cap)


@dataclass(frozen=True, eq=False)
class PosteriorTable:
    """
    PosteriorTable is the exact distribution over all 2^p states.

    Attributes:
        p (int): Dimension; row i of every array is the state with bit pattern i.
        g, m, log_w (ndarray): Weight components per state.
        log_pi (ndarray): Normalized log-probabilities.
    """
    p: int
    g: np.ndarray
    m: np.ndarray
    log_w: np.ndarray
    log_pi: np.ndarray

    @classmethod
    def from_posterior(cls, posterior, cap=DEFAULT_ORACLE_CAP):
        p = posterior.inst.p
        states = list(enumerate_states(p, cap=min(cap, DEFAULT_ENUMERATION_CAP)))
        weights = [posterior.log_weight(S) for S in states]
        g = np.array([w.g for w in weights])
        m = np.array([w.m for w in weights])
        log_w = g - m
        return cls(p=p, g=g, m=m, log_w=log_w, log_pi=log_w - logsumexp(log_w))

    @property
    def pi(self):
        return np.exp(self.log_pi)

    @property
    def states(self):
        return list(enumerate_states(self.p))

    def log_prob(self, S):
        return float(self.log_pi[S.bits])

    def prob(self, S):
        return math.exp(self.log_pi[S.bits])

    def log_mass(self, states):
        """log pi(A) for a collection of states."""
        idx = [S.bits for S in states]
        if not idx:
            return -math.inf
        return float(logsumexp(self.log_pi[idx]))

    def as_dict(self):
        pi = self.pi
        return {S: float(pi[S.bits]) for S in enumerate_states(self.p)}


def log_weight(S, inst, cfg):
    return Posterior(inst, cfg).log_weight(S)


def log_ratio(S, S2, inst, cfg):
    return Posterior(inst, cfg).log_ratio(S, S2)


def exact_distribution(inst, cfg, cap=DEFAULT_ORACLE_CAP):
    """Map Subset -> pi(S) over all 2^p states, normalized by log-sum-exp."""
    return Posterior(inst, cfg).table(cap=cap).as_dict()
