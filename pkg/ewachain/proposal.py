"""
proposal.py

The soft-boundary proposal kernel R, the Metropolis-Hastings kernel P built on it, the lazy
version of P, and the sampler loop.

Proposal rules, with CORE = {S : |S| <= 3 s*}:
  (R1) S in CORE \\ {T_hat}: a single flip, uniform over the p neighbours.
  (R2) S outside CORE: with probability 1/2 jump to T_hat, otherwise a single flip.
  (R3) S = T_hat: with probability 1/2 a single flip, otherwise pick k uniformly from
       {3s*+1, ..., p} and jump to a uniform subset of size k.
(R3) takes precedence over (R1)/(R2). When p <= 3s* no jump size is admissible and T_hat
proposes single flips only. If T_hat is itself a neighbour of S the jump mass and the flip
mass of T_hat add up.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .posterior import Posterior
from .rng import make_rng
from .subsets import Subset


class MoveKind(enum.Enum):
    SINGLE_FLIP = "single_flip"
    JUMP_TO_INIT = "jump_to_init"
    BIG_JUMP = "big_jump"


@dataclass(frozen=True)
class ProposalMove:
    kind: MoveKind
    target: Subset
    log_fwd: float
    log_bwd: float
    index: int = -1  # flipped column for SINGLE_FLIP, jump size k for BIG_JUMP


@dataclass
class ChainTrace:
    states: list
    accepts: list
    log_weights: list
    seed: int

    def __len__(self):
        return len(self.states)


def in_core(S, s_star):
    return S.size <= 3 * s_star


def big_jump_sizes(p, s_star):
    return range(3 * s_star + 1, p + 1)


def proposal_log_prob(S, S2, cfg):
    """log R(S, S2), or -inf when S2 cannot be proposed from S."""
    p, s_star, T_hat = cfg.p, cfg.s_star, cfg.T_hat
    is_neighbour = S.hamming(S2) == 1
    prob = 0.0
    if S == T_hat:
        sizes = big_jump_sizes(p, s_star)
        if len(sizes) == 0:
            if is_neighbour:
                prob = 1.0 / p
        else:
            if is_neighbour:
                prob += 1.0 / (2 * p)
            if S2.size in sizes:
                prob += 0.5 / len(sizes) / math.comb(p, S2.size)
    elif in_core(S, s_star):
        if is_neighbour:
            prob = 1.0 / p
    else:
        if is_neighbour:
            prob += 1.0 / (2 * p)
        if S2 == T_hat:
            prob += 0.5
    return math.log(prob) if prob > 0 else -math.inf


def _flip(S, rng):
    j = int(rng.integers(S.p))
    return MoveKind.SINGLE_FLIP, S.flip(j), j


def propose(S, cfg, rng):
    """Samples one move from R(S, .) and attaches log R(S, S2) and log R(S2, S)."""
    p, s_star = cfg.p, cfg.s_star
    if S == cfg.T_hat:
        sizes = big_jump_sizes(p, s_star)
        if len(sizes) > 0 and rng.random() < 0.5:
            k = int(rng.integers(sizes.start, sizes.stop))
            members = rng.choice(p, size=k, replace=False)
            kind, target, index = MoveKind.BIG_JUMP, Subset.from_indices(members, p), k
        else:
            kind, target, index = _flip(S, rng)
    elif in_core(S, s_star):
        kind, target, index = _flip(S, rng)
    elif rng.random() < 0.5:
        kind, target, index = MoveKind.JUMP_TO_INIT, cfg.T_hat, -1
    else:
        kind, target, index = _flip(S, rng)
    return ProposalMove(kind=kind, target=target, index=index,
                        log_fwd=proposal_log_prob(S, target, cfg),
                        log_bwd=proposal_log_prob(target, S, cfg))


def mh_step(S, inst, cfg, rng, lazy=False, posterior=None):
    """
    One Metropolis-Hastings transition from S. Returns (next state, accepted).

    The lazy chain first holds with probability 1/2. Otherwise a move is proposed and
    accepted with probability min{1, exp(log_ratio + log_bwd - log_fwd)}. A big jump from T_hat
    can land on T_hat itself when |T_hat| > 3 s*; that move is a hold and is not counted as accepted.
    """
    if posterior is None:
        posterior = Posterior(inst, cfg)
    if lazy and rng.random() < 0.5:
        return S, False
    move = propose(S, cfg, rng)
    if move.target == S:
        return S, False
    log_accept = posterior.log_ratio(S, move.target) + move.log_bwd - move.log_fwd
    u = rng.random()
    if log_accept >= 0 or u < math.exp(log_accept):
        return move.target, True
    return S, False


def run_chain(inst, cfg, steps, lazy=True, rng=None, posterior=None):
    """Runs `steps` transitions from T_hat. The stream defaults to Philox(cfg.seed)."""
    if steps < 0:
        raise ValueError(f"steps={steps} must be nonnegative.")
    if rng is None:
        rng = make_rng(cfg.seed)
    if posterior is None:
        posterior = Posterior(inst, cfg)
    S = cfg.T_hat
    trace = ChainTrace(states=[S], accepts=[False], log_weights=[posterior.log_weight(S).log_w], seed=cfg.seed)
    for _ in range(steps):
        S, accepted = mh_step(S, inst, cfg, rng, lazy=lazy, posterior=posterior)
        trace.states.append(S)
        trace.accepts.append(accepted)
        trace.log_weights.append(posterior.log_weight(S).log_w)
    return trace


def empirical_distribution(trace):
    """Visit frequencies of a trace as an array indexed by bit pattern."""
    p = trace.states[0].p
    counts = np.bincount([S.bits for S in trace.states], minlength=2**p)
    return counts / counts.sum()
