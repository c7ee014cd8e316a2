"""
Tests for the problem instance and the chain constants:

  - Column normalization rescales every column to length sqrt(n) and keeps directions;
    a zero column is refused.
  - build() computes Y = X theta + epsilon and the support; the stored arrays are read-only.
  - Mismatched shapes and a declared support that differs from theta are refused.
  - ChainConfig.auto takes D = 4 + (4L + 2c)/beta when D is not given.
  - An explicit D below that choice, and an empty initializer, are accepted with a warning.
  - Invalid constants are refused and incompatible configs are detected.
"""
import math

import numpy as np
import pytest

from ewachain.errors import DimensionMismatch, ZeroColumn
from ewachain.problem import ChainConfig, ProblemInstance, d_choice_minimum, normalize_columns
from ewachain.rng import make_rng
from ewachain.subsets import Subset
from tests.helpers import gaussian_design, make_instance, orthogonal_design


def test_normalize_columns():
    X = make_rng(1).standard_normal((10, 4)) * np.array([0.1, 1.0, 7.0, 300.0])
    Xn = normalize_columns(X)
    assert np.allclose(np.linalg.norm(Xn, axis=0), math.sqrt(10))
    for j in range(4):
        ratio = Xn[:, j] / X[:, j]
        assert np.allclose(ratio, ratio[0])
        assert ratio[0] > 0


def test_normalize_zero_column():
    X = np.ones((5, 3))
    X[:, 1] = 0.0
    with pytest.raises(ZeroColumn) as info:
        normalize_columns(X)
    assert info.value.j == 1


def test_build():
    X = orthogonal_design(8, 3)
    theta = np.array([0.0, 2.5, -1.0])
    epsilon = make_rng(0).standard_normal(8)
    inst = ProblemInstance.build(X, theta, epsilon, s_star=2)
    assert inst.n == 8 and inst.p == 3
    assert inst.T == Subset.from_indices([1, 2], 3)
    assert np.allclose(inst.Y, X @ theta + epsilon)
    assert inst.theta_min == 1.0
    assert inst.is_normalized()
    with pytest.raises(ValueError):
        inst.Y[0] = 1.0


def test_empty_support():
    inst = make_instance(orthogonal_design(8, 3), [], 1.0)
    assert inst.T.size == 0
    assert inst.theta_min == math.inf


def test_build_rejects_mismatches():
    X = orthogonal_design(8, 3)
    with pytest.raises(DimensionMismatch):
        ProblemInstance.build(X, np.zeros(4), np.zeros(8), s_star=1)
    with pytest.raises(DimensionMismatch):
        ProblemInstance.build(X, np.zeros(3), np.zeros(7), s_star=1)
    with pytest.raises(ValueError):
        ProblemInstance(X=X, Y=np.zeros(8), theta=np.zeros(3), T=Subset.from_indices([0], 3),
                        s_star=1, epsilon=np.zeros(8))
    with pytest.raises(ValueError):
        ProblemInstance.build(X, np.zeros(3), np.zeros(8), s_star=0)


def test_auto_D():
    T_hat = Subset.from_indices([0], 5)
    cfg = ChainConfig.auto(T_hat, 1, c=3.0, L=2.0, nu=0.5, beta=2.0, warn=False)
    assert cfg.D == d_choice_minimum(2.0, 3.0, 2.0) == 4.0 + (8.0 + 6.0) / 2.0
    assert cfg.meets_D_choice
    assert cfg.p == 5


def test_warnings():
    T_hat = Subset.from_indices([0], 5)
    with pytest.warns(UserWarning, match="below the choice"):
        cfg = ChainConfig.auto(T_hat, 1, c=1.0, L=1.0, nu=1.0, D=1.0)
    assert not cfg.meets_D_choice
    with pytest.warns(UserWarning, match="empty set"):
        ChainConfig.auto(Subset.empty(5), 1, c=1.0, L=1.0, nu=1.0)


@pytest.mark.parametrize("field,value", [("beta", 0.0), ("D", -1.0), ("c", 0.0), ("L", -2.0),
                                         ("nu", 0.0), ("nu", 1.5), ("s_star", 0)])
def test_invalid_constants(field, value):
    kwargs = dict(beta=2.0, D=10.0, c=1.0, L=1.0, nu=1.0, T_hat=Subset.empty(4), s_star=1, warn=False)
    kwargs[field] = value
    with pytest.raises(ValueError):
        ChainConfig(**kwargs)


def test_check_compatible():
    inst = make_instance(gaussian_design(16, 4, seed=0), [0], 1.0)
    cfg = ChainConfig.auto(Subset.from_indices([0], 5), 1, c=1.0, L=1.0, nu=1.0, warn=False)
    with pytest.raises(DimensionMismatch):
        cfg.check_compatible(inst)
    cfg = ChainConfig.auto(Subset.from_indices([0], 4), 2, c=1.0, L=1.0, nu=1.0, warn=False)
    with pytest.raises(DimensionMismatch):
        cfg.check_compatible(inst)
