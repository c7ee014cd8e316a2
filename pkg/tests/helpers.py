"""Builders for small instances and chain configs used across the test modules."""
import numpy as np
import scipy.linalg

from ewachain.problem import ChainConfig, ProblemInstance, normalize_columns
from ewachain.rng import make_rng
from ewachain.subsets import Subset


def orthogonal_design(n, p):
    return scipy.linalg.hadamard(n).astype(float)[:, 1:p + 1]


def gaussian_design(n, p, seed):
    return normalize_columns(make_rng(seed).standard_normal((n, p)))


def make_instance(X, support, magnitude, s_star=1, noise_seed=0, sigma=1.0, noise=True):
    n, p = X.shape
    theta = np.zeros(p)
    theta[list(support)] = magnitude
    epsilon = sigma * make_rng(noise_seed).standard_normal(n) if noise else np.zeros(n)
    return ProblemInstance.build(X, theta, epsilon, s_star, sigma=sigma)


def make_config(inst, T_hat=None, D=None, beta=2.0, c=1.0, L=1.0, nu=1.0, seed=0):
    if T_hat is None:
        T_hat = inst.T
    elif not isinstance(T_hat, Subset):
        T_hat = Subset.from_indices(T_hat, inst.p)
    return ChainConfig.auto(T_hat, inst.s_star, c=c, L=L, nu=nu, beta=beta, D=D, seed=seed, warn=False)


def subset(indices, p):
    return Subset.from_indices(indices, p)
