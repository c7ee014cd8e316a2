"""
projection.py

Incremental orthogonal projections onto the column span of X_S.

A `ProjectionState` keeps an orthonormal basis of span(X_S) built by Gram-Schmidt with one
re-orthogonalization pass ("twice is enough"). Adding a column costs O(n * rank); removing
one rebuilds the basis from the remaining columns in their stored insertion order, which
keeps results bit-reproducible. The module also measures the restricted eigenvalue
constant nu of a design and checks the one-step and telescoping projection identities
exhaustively on small designs.
"""
from __future__ import annotations

import itertools
import math

import numpy as np

from .errors import AlreadyActive, DimensionMismatch, EnumerationTooLarge, NotActive, NotDisjoint
from .subsets import Subset

# A new column is dependent when its residual norm is at most RANK_RTOL * sqrt(n).
RANK_RTOL = 1e-8
DEFAULT_SUPPORT_CAP = 2**20


class ProjectionState:
    """
    ProjectionState is the orthogonal projector Phi_S onto span(X_S), held as a basis.

    Attributes:
        X (ndarray): The n x p design the columns are taken from (shared, read-only).
        active (Subset): The current column set S.
        basis (ndarray): n x rank matrix with orthonormal columns spanning span(X_S).
        col_order (tuple): Columns of S in insertion order, dependent columns included.

    Methods:
        empty(X) / from_subset(X, S): Constructors.
        project_sq_norm(w): ||Phi_S w||^2.
        project(w) / residual(w): Phi_S w and (I - Phi_S) w.
        add_column(k, *queries): New state for S + k and the squared-norm gains of the queries.
        remove_column(k): New state for S - k.

    Notes:
        States never change after construction; updates return new states, so a chain can
        keep a state per visited subset without copying. `rank` equals trace(Phi_S) and can
        be smaller than |S| when X_S is rank deficient.
    """
    __slots__ = ("X", "active", "basis", "col_order")

    def __init__(self, X, active, basis, col_order):
        self.X = X
        self.active = active
        self.basis = basis
        self.col_order = tuple(col_order)

    @classmethod
    def empty(cls, X):
        X = np.asarray(X, dtype=float)
        return cls(X, Subset.empty(X.shape[1]), np.zeros((X.shape[0], 0)), ())

    @classmethod
    def from_subset(cls, X, S, order=None):
        """Builds the state for S by inserting its columns in `order` (ascending by default)."""
        state = cls.empty(X)
        for k in (S.indices if order is None else order):
            state, _ = state.add_column(k)
        return state

    @property
    def n(self):
        return self.X.shape[0]

    @property
    def rank(self):
        return self.basis.shape[1]

    def _check_vector(self, w):
        w = np.asarray(w, dtype=float)
        if w.shape != (self.n,):
            raise DimensionMismatch(f"Query vector has shape {w.shape}, expected ({self.n},).")
        return w

    def coefficients(self, w):
        return self.basis.T @ self._check_vector(w)

    def project_sq_norm(self, w):
        coef = self.coefficients(w)
        return float(coef @ coef)

    def project(self, w):
        return self.basis @ self.coefficients(w)

    def residual(self, w):
        w = self._check_vector(w)
        return w - self.basis @ (self.basis.T @ w)

    def _orthogonal_part(self, v):
        for _ in range(2):
            v = v - self.basis @ (self.basis.T @ v)
        return v

    def add_column(self, k, *queries):
        """
        Returns (state for S + k, gains) where gains[i] = ||Phi_{S+k} w_i||^2 - ||Phi_S w_i||^2
        = <z_k, w_i>^2 / ||z_k||^2 with z_k = (I - Phi_S) X_k. A column whose residual falls
        below the rank tolerance leaves the basis unchanged and all gains are zero.
        """
        if k in self.active:
            raise AlreadyActive(k)
        z = self._orthogonal_part(self.X[:, k])
        z_norm = float(np.linalg.norm(z))
        active = self.active.flip(k)
        order = self.col_order + (k,)
        if z_norm <= RANK_RTOL * math.sqrt(self.n):
            return ProjectionState(self.X, active, self.basis, order), np.zeros(len(queries))
        q = z / z_norm
        gains = np.array([float(q @ self._check_vector(w)) ** 2 for w in queries])
        return ProjectionState(self.X, active, np.column_stack([self.basis, q]), order), gains

    def remove_column(self, k):
        if k not in self.active:
            raise NotActive(k)
        return ProjectionState.from_subset(self.X, self.active.flip(k), order=[j for j in self.col_order if j != k])


def project_sq_norm(state, w):
    return state.project_sq_norm(w)


def add_column(state, k, *queries):
    return state.add_column(k, *queries)


def remove_column(state, k):
    return state.remove_column(k)


def dense_projector(X, S):
    """Phi_S = X_S (X_S^T X_S)^+ X_S^T from a pseudo-inverse; the reference for the incremental engine."""
    X = np.asarray(X, dtype=float)
    if S.size == 0:
        return np.zeros((X.shape[0], X.shape[0]))
    XS = X[:, list(S.indices)]
    return XS @ np.linalg.pinv(XS)


def telescoping_bound_terms(X, A, B, w, nu):
    """
    Per-step terms <(I - Phi_{A_l}) X_{k[l+1]}, w>^2 / (n nu) for inserting the columns of B
    into A in ascending order. Their sum bounds ||Phi_{A+B} w||^2 - ||Phi_A w||^2 from above
    whenever nu satisfies the restricted eigenvalue condition on A + B.
    """
    if not A.isdisjoint(B):
        raise NotDisjoint(f"Sets {A} and {B} overlap.")
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    state = ProjectionState.from_subset(X, A)
    terms = []
    for k in B.indices:
        z = state.residual(X[:, k])
        terms.append(float(z @ w) ** 2 / (n * nu))
        state, _ = state.add_column(k)
    return terms


def _support_layer(X, size, cap, what):
    p = X.shape[1]
    size = min(size, p)
    count = math.comb(p, size)
    if count > cap:
        raise EnumerationTooLarge(what, count, cap)
    return itertools.combinations(range(p), size)


def restricted_nu(X, size_cap, cap=DEFAULT_SUPPORT_CAP):
    """
    min over nonempty |S| <= size_cap of lambda_min(X_S^T X_S)/n.

    By Cauchy interlacing the smallest eigenvalue of a principal submatrix can only drop as
    the submatrix grows, so scanning the layer |S| = min(size_cap, p) is exhaustive.
    Rounding below zero is clipped, so a singular restricted Gram matrix gives exactly 0.
    """
    X = np.asarray(X, dtype=float)
    if size_cap < 1:
        raise ValueError(f"size_cap={size_cap} must be at least 1.")
    n = X.shape[0]
    gram = X.T @ X
    smallest = math.inf
    for combo in _support_layer(X, size_cap, cap, f"supports of size {min(size_cap, X.shape[1])}"):
        idx = list(combo)
        smallest = min(smallest, float(np.linalg.eigvalsh(gram[np.ix_(idx, idx)])[0]) / n)
    return max(smallest, 0.0)


def restricted_lambda_max(X, size_cap, cap=DEFAULT_SUPPORT_CAP):
    """max over |S| <= size_cap of lambda_max(X_S^T X_S / n), again on the top layer only."""
    X = np.asarray(X, dtype=float)
    n = X.shape[0]
    gram = X.T @ X
    largest = 0.0
    for combo in _support_layer(X, max(size_cap, 1), cap, f"supports of size {min(max(size_cap, 1), X.shape[1])}"):
        idx = list(combo)
        largest = max(largest, float(np.linalg.eigvalsh(gram[np.ix_(idx, idx)])[-1]) / n)
    return largest


class ProjectionLemmaCheck:
    """
    ProjectionLemmaCheck verifies the projection identities behind the ratio bounds on every
    disjoint pair (A, B) with B nonempty and |A| + |B| <= size_cap.

    Attributes:
        _data (tuple): (summary, errors) as returned by the `data` property.

    Description:
        For each pair the check measures
          - (i)   the smallest singular value of W = (I - Phi_A) X_B against sqrt(n nu), plus a
                  random direction t when an rng is supplied,
          - (ii)  lambda_min(X_B^T (I - Phi_A) X_B) against n nu,
          - (iii) for |B| = 1, the one-step gain identity and its upper bound <z,w>^2/(n nu),
          - (iv)  the telescoping bound on ||Phi_{A+B} w||^2 - ||Phi_A w||^2.
        Every failure becomes one line in `errors`; `summary` carries the counts and the
        smallest relative margins seen for each family.

    Usage:
        summary, errors = ProjectionLemmaCheck(X, nu, size_cap=6, w=Y).data
    """

    def __init__(self, X, nu, size_cap, w=None, rng=None, rtol=1e-8, cap=DEFAULT_SUPPORT_CAP):
        self._data = self._check(np.asarray(X, dtype=float), nu, size_cap, w, rng, rtol, cap)

    @property
    def data(self):
        return self._data

    @property
    def passed(self):
        return not self._data[1]

    def _check(self, X, nu, size_cap, w, rng, rtol, cap):
        n, p = X.shape
        if not nu > 0:
            raise ValueError(f"nu={nu} must be positive for the projection bounds to be meaningful.")
        if w is None:
            w = np.ones(n)
        w = np.asarray(w, dtype=float)
        size_cap = min(size_cap, p)
        floor = n * nu
        total = sum(math.comb(p, a) * math.comb(p - a, b)
                    for a in range(size_cap) for b in range(1, size_cap - a + 1))
        if total > cap:
            raise EnumerationTooLarge("disjoint (A, B) pairs", total, cap)

        errors = []
        margins = {"singular": math.inf, "eigen": math.inf, "one_step": math.inf, "telescoping": math.inf}
        pairs = 0
        for a in range(size_cap):
            for A_idx in itertools.combinations(range(p), a):
                A = Subset.from_indices(A_idx, p)
                state_A = ProjectionState.from_subset(X, A)
                base = state_A.project_sq_norm(w)
                rest = [j for j in range(p) if j not in A]
                for b in range(1, size_cap - a + 1):
                    for B_idx in itertools.combinations(rest, b):
                        pairs += 1
                        B = Subset.from_indices(B_idx, p)
                        W = X[:, list(B_idx)]
                        W = W - state_A.basis @ (state_A.basis.T @ W)

                        sv_min = float(np.linalg.svd(W, compute_uv=False)[-1])
                        margin = sv_min**2 / floor - 1 if floor > 0 else math.inf
                        margins["singular"] = min(margins["singular"], margin)
                        if sv_min**2 < floor * (1 - rtol):
                            errors.append(f"(i) fails for A={A}, B={B}: smallest singular value {sv_min:.6g} "
                                          f"< sqrt(n nu) = {math.sqrt(floor):.6g}")
                        if rng is not None:
                            t = rng.standard_normal(b)
                            if np.linalg.norm(W @ t) ** 2 < floor * (t @ t) * (1 - rtol):
                                errors.append(f"(i) fails for A={A}, B={B} on a random direction")

                        eig_min = float(np.linalg.eigvalsh(W.T @ W)[0])
                        margins["eigen"] = min(margins["eigen"], eig_min / floor - 1 if floor > 0 else math.inf)
                        if eig_min < floor * (1 - rtol):
                            errors.append(f"(ii) fails for A={A}, B={B}: lambda_min {eig_min:.6g} < n nu = {floor:.6g}")

                        full = ProjectionState.from_subset(X, A.union(B))
                        exact = full.project_sq_norm(w) - base
                        terms = telescoping_bound_terms(X, A, B, w, nu)
                        slack = rtol * max(1.0, float(w @ w))
                        if b == 1:
                            z = W[:, 0]
                            identity = float(z @ w) ** 2 / float(z @ z)
                            if abs(exact - identity) > slack:
                                errors.append(f"(iii) identity fails for A={A}, k={B_idx[0]}: "
                                              f"{exact:.12g} != {identity:.12g}")
                            margins["one_step"] = min(margins["one_step"], terms[0] - exact)
                            if exact > terms[0] + slack:
                                errors.append(f"(iii) bound fails for A={A}, k={B_idx[0]}: {exact:.12g} > {terms[0]:.12g}")
                        margins["telescoping"] = min(margins["telescoping"], sum(terms) - exact)
                        if exact > sum(terms) + slack:
                            errors.append(f"(iv) fails for A={A}, B={B}: {exact:.12g} > {sum(terms):.12g}")

        summary = {"pairs": pairs, "size_cap": size_cap, "nu": nu, "min_margins": margins}
        return summary, errors
