"""
canonical_paths.py

The G-map, the tree it defines on {0,1}^p with the true support T as root, the descendant sets
Lambda(S), canonical paths between states, edge loadings and the path-method bound on 1/gap.

With U = {S != T : |S \\ T| <= 3 s*}:
  (G1) S a strict superset of T with S in U: drop the smallest index of S \\ T.
  (G2) S in U but not a superset of T: add the i in T \\ S maximizing ||Phi_{S+i} X theta||,
       ties to the smallest index.
  (G3) S outside U: jump to T_hat.

Every quantity involving pi is computed from log-probabilities, so tables whose smallest
masses underflow double precision still give finite loadings.
"""
from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from .errors import CycleDetected, RootHasNoParent, StateSpaceTooLarge, TreeConstructionError
from .posterior import DEFAULT_ORACLE_CAP, Posterior, exp_or_inf
from .projection import ProjectionState
from .proposal import proposal_log_prob
from .subsets import enumerate_states

# Pair enumeration for loadings is O(4^p); refuse above this many states.
DEFAULT_LOADING_CAP = 2**10
# Absolute slack on log-domain inequality checks.
LOG_ATOL = 1e-9
# Relative slack when comparing projection norms for the G2 argmax.
TIE_RTOL = 1e-12


def _logaddexp(a, b):
    if a == -math.inf:
        return b
    if b == -math.inf:
        return a
    hi, lo = (a, b) if a >= b else (b, a)
    return hi + math.log1p(math.exp(lo - hi))


def in_U(S, T, s_star):
    return S != T and S.difference(T).size <= 3 * s_star


def g_map(S, inst, cfg):
    """Parent of S in the G-tree; raises RootHasNoParent for S = T."""
    T = inst.T
    if S == T:
        raise RootHasNoParent(S)
    extra = S.difference(T)
    if extra.size > 3 * inst.s_star:
        return cfg.T_hat
    if S.issuperset(T):
        return S.flip(extra.indices[0])
    base = ProjectionState.from_subset(inst.X, S)
    signal = inst.signal
    candidates = T.difference(S).indices
    gains = [base.add_column(i, signal)[1][0] for i in candidates]
    best = max(gains)
    floor = best - TIE_RTOL * max(1.0, abs(best))
    for i, gain in zip(candidates, gains):
        if gain >= floor:
            return S.flip(i)


@dataclass
class GTree:
    """
    GTree is the parent map S -> G(S) over all states, rooted at T.

    Attributes:
        root (Subset): The true support T.
        parent (dict): Subset -> Subset for every S != T.
        depth (dict): Number of G-steps from S to T.
        children (dict): Inverse adjacency, children listed in ascending bit order.
        s_star (int): Sparsity budget the U-region was formed with.
    """
    root: object
    parent: dict
    depth: dict
    children: dict
    s_star: int
    _height: dict = field(default=None, repr=False)

    @property
    def states(self):
        return sorted(self.depth)

    @property
    def edges(self):
        """Upward tree edges (S, G(S)) in ascending order of S."""
        return [(S, self.parent[S]) for S in sorted(self.parent)]

    def ancestors(self, S):
        """S, G(S), G(G(S)), ... up to and including the root."""
        chain = [S]
        while chain[-1] != self.root:
            chain.append(self.parent[chain[-1]])
        return chain

    def heights(self):
        if self._height is None:
            height = {S: 0 for S in self.depth}
            for S in sorted(self.parent, key=lambda s: -self.depth[s]):
                up = self.parent[S]
                height[up] = max(height[up], height[S] + 1)
            self._height = height
        return self._height

    @property
    def max_depth(self):
        return max(self.depth.values())

    @property
    def diameter(self):
        """Longest canonical path, from the two tallest child branches at every node."""
        height = self.heights()
        best = 0
        for S, kids in self.children.items():
            tops = sorted((height[k] + 1 for k in kids), reverse=True)[:2]
            best = max(best, sum(tops))
        return best

    def subtree_log_mass(self, log_pi):
        """log pi(Lambda(S)) for every S, accumulated from the leaves up."""
        mass = {S: float(log_pi[S.bits]) for S in self.depth}
        for S in sorted(self.parent, key=lambda s: -self.depth[s]):
            up = self.parent[S]
            mass[up] = _logaddexp(mass[up], mass[S])
        return mass

    def to_dot(self, name="gtree"):
        """Graphviz source; nodes are labelled by hex bits and size, ranked by |S|."""
        lines = [f"digraph {name} {{", "  rankdir=BT;"]
        by_size = {}
        for S in self.states:
            by_size.setdefault(S.size, []).append(S)
            shape = "doublecircle" if S == self.root else "ellipse"
            lines.append(f'  "{S.hex()}" [label="{S.hex()}\\n|S|={S.size}", shape={shape}];')
        for size in sorted(by_size):
            members = " ".join(f'"{S.hex()}";' for S in by_size[size])
            lines.append(f"  {{ rank=same; {members} }}")
        for S, up in self.edges:
            lines.append(f'  "{S.hex()}" -> "{up.hex()}";')
        lines.append("}")
        return "\n".join(lines) + "\n"


def build_tree(inst, cfg, cap=DEFAULT_ORACLE_CAP):
    """
    Builds the G-tree over all 2^p states. Raises CycleDetected when iterating G from some
    state never reaches T, and TreeConstructionError when a G-path leaves U before reaching T.
    """
    cfg.check_compatible(inst)
    p, T, s_star = inst.p, inst.T, inst.s_star
    if 2**p > cap:
        raise StateSpaceTooLarge(p, cap)
    parent = {S: g_map(S, inst, cfg) for S in enumerate_states(p) if S != T}

    depth = {T: 0}
    for S in parent:
        trail = []
        seen = set()
        node = S
        while node not in depth:
            if node in seen:
                raise CycleDetected(node)
            seen.add(node)
            trail.append(node)
            node = parent[node]
        base = depth[node]
        for offset, member in enumerate(reversed(trail), start=1):
            depth[member] = base + offset

    for S, up in parent.items():
        if in_U(S, T, s_star) and up != T and not in_U(up, T, s_star):
            raise TreeConstructionError(f"G-path from {S} leaves U at {up}.")

    children = {S: [] for S in depth}
    for S in sorted(parent):
        children[parent[S]].append(S)
    return GTree(root=T, parent=parent, depth=depth, children=children, s_star=s_star)


def lambda_set(S, tree):
    """Lambda(S): S together with every state whose G-path passes through S."""
    found = []
    queue = deque([S])
    while queue:
        node = queue.popleft()
        found.append(node)
        queue.extend(tree.children[node])
    return set(found)


def canonical_path(I, F, tree):
    """Tree path from I up to the meeting point with F's ancestor chain, then down to F."""
    if I == F:
        return [I]
    up = tree.ancestors(I)
    position = {S: i for i, S in enumerate(up)}
    down = []
    node = F
    while node not in position:
        down.append(node)
        node = tree.parent[node]
    return up[:position[node] + 1] + down[::-1]


@dataclass(frozen=True)
class EdgeLoading:
    """
    Loading of one directed tree edge.

    `child` is the lower end of the edge, so Lambda(child) holds every start of a path that
    crosses the edge upward and every end of a path crossing it downward.
    """
    edge: tuple
    child: object
    log_q: float
    log_rho: float
    log_lambda_mass: float
    log_analytic: float

    @property
    def q(self):
        return exp_or_inf(self.log_q)

    @property
    def rho(self):
        return exp_or_inf(self.log_rho)

    @property
    def lambda_mass(self):
        return exp_or_inf(self.log_lambda_mass)

    @property
    def analytic_bound(self):
        return exp_or_inf(self.log_analytic)

    @property
    def within_bound(self):
        return self.log_rho <= self.log_analytic + LOG_ATOL


def edge_log_q(S, S2, log_pi, cfg):
    """log Q{S, S2} = log min{pi(S) R(S, S2), pi(S2) R(S2, S)}."""
    return min(float(log_pi[S.bits]) + proposal_log_prob(S, S2, cfg),
               float(log_pi[S2.bits]) + proposal_log_prob(S2, S, cfg))


def edge_loadings(inst, cfg, tree, table=None, cap=DEFAULT_LOADING_CAP):
    """
    Exact loadings rho(e) = sum over canonical paths through e of pi(I) pi(F) / Q(e) for both
    directions of every tree edge, by enumerating all ordered pairs (I, F). A path step that
    is not a tree edge raises TreeConstructionError.
    """
    p = inst.p
    if 2**p > cap:
        raise StateSpaceTooLarge(p, cap)
    if table is None:
        table = Posterior(inst, cfg).table()
    log_pi = table.log_pi
    states = tree.states

    acc = {}
    for S, up in tree.edges:
        acc[(S, up)] = -math.inf
        acc[(up, S)] = -math.inf
    for I in states:
        lp_I = float(log_pi[I.bits])
        up = tree.ancestors(I)
        position = {S: i for i, S in enumerate(up)}
        for F in states:
            if F == I:
                continue
            weight = lp_I + float(log_pi[F.bits])
            down = []
            node = F
            while node not in position:
                down.append(node)
                node = tree.parent[node]
            path = up[:position[node] + 1] + down[::-1]
            for step in zip(path, path[1:]):
                if step not in acc:
                    raise TreeConstructionError(f"Canonical path from {I} to {F} uses non-tree edge {step}.")
                acc[step] = _logaddexp(acc[step], weight)

    subtree = tree.subtree_log_mass(log_pi)
    loadings = []
    for S, up in tree.edges:
        log_q = edge_log_q(S, up, log_pi, cfg)
        if log_q == -math.inf:
            raise TreeConstructionError(f"Tree edge {S} -> {up} has zero edge weight.")
        log_lam = subtree[S]
        outside = np.ones(len(log_pi), dtype=bool)
        outside[[member.bits for member in lambda_set(S, tree)]] = False
        log_out = float(logsumexp(log_pi[outside])) if outside.any() else -math.inf
        log_analytic = log_lam + log_out - log_q
        for edge in ((S, up), (up, S)):
            loadings.append(EdgeLoading(edge=edge, child=S, log_q=log_q, log_rho=acc[edge] - log_q,
                                        log_lambda_mass=log_lam, log_analytic=log_analytic))
    return loadings


def max_log_loading(loadings):
    return max(load.log_rho for load in loadings)


def log_sinclair_bound(tree, loadings):
    return math.log(tree.diameter) + max_log_loading(loadings)


def sinclair_bound(tree, loadings):
    """(longest canonical path) * (largest loading); the path method gives gap(P) >= 1 / this."""
    return exp_or_inf(log_sinclair_bound(tree, loadings))


class PiGmapCheck:
    """
    PiGmapCheck verifies, for every S != T,
      - P(S, G(S)) >= 1/(2p), with log P(S, G(S)) = log Q{S, G(S)} - log pi(S),
      - pi(Lambda(S)) <= 3 pi(S).

    Violations are reported, never raised; they are expected when the good event fails.

    Usage:
        summary, errors = PiGmapCheck(inst, cfg, tree).data
    """

    def __init__(self, inst, cfg, tree, table=None):
        if table is None:
            table = Posterior(inst, cfg).table()
        self._data = self._check(inst, cfg, tree, table.log_pi)

    @property
    def data(self):
        return self._data

    @property
    def passed(self):
        return not self._data[1]

    def _check(self, inst, cfg, tree, log_pi):
        p = inst.p
        floor = -math.log(2 * p)
        subtree = tree.subtree_log_mass(log_pi)
        errors = []
        margins = {"step_probability": math.inf, "lambda_mass": math.inf}
        for S, up in tree.edges:
            lp_S = float(log_pi[S.bits])
            log_step = edge_log_q(S, up, log_pi, cfg) - lp_S
            margin = log_step - floor
            margins["step_probability"] = min(margins["step_probability"], margin)
            if margin < -LOG_ATOL:
                errors.append(f"P(S, G(S)) < 1/(2p) for S={S}: log P = {log_step:.6g}, log margin {margin:.6g}")
            margin = math.log(3.0) + lp_S - subtree[S]
            margins["lambda_mass"] = min(margins["lambda_mass"], margin)
            if margin < -LOG_ATOL:
                errors.append(f"pi(Lambda(S)) > 3 pi(S) for S={S}: log margin {margin:.6g}")
        summary = {"states": len(tree.edges), "min_log_margins": margins}
        return summary, errors


def check_pi_gmap(inst, cfg, tree, table=None):
    return PiGmapCheck(inst, cfg, tree, table=table).data


class RatioLemmaCheck:
    """
    RatioLemmaCheck evaluates the log pi ratio inequalities over every state, with
    C = 2D + 4/beta + 2c/beta:

      that      all S:       log pi(S)/pi(T_hat) <= -D|S| log p / 2 + C s* log p
      stronger  all S:       log pi(S)/pi(T_hat) <= -D(|S| - 2s*) log p + (4s* + 2c s* log p + 2|S| L log p)/beta
      U         S in U:      log pi(S)/pi(G(S))  <= -D log p / 2
      U_comp    S not in U:  log pi(S)/pi(G(S))  <= -2|S| log p
      gmap_UU   S in U:      pi(G(S)) >= pi(S)

    The first two families hold only when the events and assumptions behind them do; every
    failure is reported with its margin.

    Usage:
        summary, errors = RatioLemmaCheck(inst, cfg, tree).data
    """

    FAMILIES = ("that", "stronger", "U", "U_comp", "gmap_UU")

    def __init__(self, inst, cfg, tree, table=None):
        if table is None:
            table = Posterior(inst, cfg).table()
        self._data = self._check(inst, cfg, tree, table.log_pi)

    @property
    def data(self):
        return self._data

    @property
    def passed(self):
        return not self._data[1]

    def _check(self, inst, cfg, tree, log_pi):
        s_star, log_p, T = inst.s_star, inst.log_p, inst.T
        D, beta, c, L = cfg.D, cfg.beta, cfg.c, cfg.L
        C = 2 * D + 4 / beta + 2 * c / beta
        lp_hat = float(log_pi[cfg.T_hat.bits])
        counts = {name: 0 for name in self.FAMILIES}
        margins = {name: math.inf for name in self.FAMILIES}
        errors = []

        def record(name, S, lhs, rhs):
            counts[name] += 1
            margin = rhs - lhs
            margins[name] = min(margins[name], margin)
            if margin < -LOG_ATOL * max(1.0, abs(rhs)):
                errors.append(f"[{name}] fails for S={S}: {lhs:.6g} > {rhs:.6g}")

        for S in tree.states:
            lp_S = float(log_pi[S.bits])
            size = S.size
            record("that", S, lp_S - lp_hat, -0.5 * D * size * log_p + C * s_star * log_p)
            record("stronger", S, lp_S - lp_hat,
                   -D * (size - 2 * s_star) * log_p + (4 * s_star + 2 * c * s_star * log_p + 2 * size * L * log_p) / beta)
            if S == T:
                continue
            lp_up = float(log_pi[tree.parent[S].bits])
            if in_U(S, T, s_star):
                record("U", S, lp_S - lp_up, -0.5 * D * log_p)
                record("gmap_UU", S, lp_S, lp_up)
            else:
                record("U_comp", S, lp_S - lp_up, -2.0 * size * log_p)

        summary = {"counts": counts, "min_margins": margins, "C": C}
        return summary, errors


def check_ratio_lemma(inst, cfg, tree, table=None):
    return RatioLemmaCheck(inst, cfg, tree, table=table).data


def path_length_cases(tree, inst, cfg):
    """
    Largest observed depth per case with its bound:
      a) S in U, superset of T:      depth - (|S| - |T|) <= 0
      b) S = T_hat:                  depth <= 3 s*
      c) S outside U:                depth <= 1 + 3 s*
      d) S in U, not a superset of T: depth <= 4 s*
    Case a) is bounded per state; the others by a constant.
    """
    T, s_star = inst.T, inst.s_star
    cases = {
        "a": {"states": 0, "max_excess": -math.inf, "bound": 0},
        "b": {"states": 0, "max_depth": 0, "bound": 3 * s_star},
        "c": {"states": 0, "max_depth": 0, "bound": 1 + 3 * s_star},
        "d": {"states": 0, "max_depth": 0, "bound": 4 * s_star},
    }
    for S, d in tree.depth.items():
        if S == T:
            continue
        if S == cfg.T_hat:
            cases["b"]["states"] += 1
            cases["b"]["max_depth"] = max(cases["b"]["max_depth"], d)
        if not in_U(S, T, s_star):
            key = "c"
        elif S.issuperset(T):
            cases["a"]["states"] += 1
            cases["a"]["max_excess"] = max(cases["a"]["max_excess"], d - (S.size - T.size))
            continue
        else:
            key = "d"
        cases[key]["states"] += 1
        cases[key]["max_depth"] = max(cases[key]["max_depth"], d)
    cases["a"]["holds"] = cases["a"]["max_excess"] <= 0
    for key in "bcd":
        cases[key]["holds"] = cases[key]["max_depth"] <= cases[key]["bound"]
    cases["diameter"] = {"value": tree.diameter, "bound": 2 + 8 * s_star, "holds": tree.diameter <= 2 + 8 * s_star}
    return cases


def hop_growth_check(tree, inst, cfg, table=None):
    """Along every tree edge inside U, pi must grow by a factor of at least p^(D/2)."""
    if table is None:
        table = Posterior(inst, cfg).table()
    log_pi = table.log_pi
    required = 0.5 * cfg.D * inst.log_p
    smallest = math.inf
    edges = 0
    for S, up in tree.edges:
        if in_U(S, inst.T, inst.s_star) and in_U(up, inst.T, inst.s_star):
            edges += 1
            smallest = min(smallest, float(log_pi[up.bits] - log_pi[S.bits]))
    return {"edges": edges, "min_log_growth": smallest, "required": required,
            "holds": smallest >= required - LOG_ATOL}
