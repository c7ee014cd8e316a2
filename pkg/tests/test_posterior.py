"""
Tests for the aggregation weights and the exact distribution:

  - The weight of the empty set is zero; on an orthogonal design a singleton weight has a
    closed form.
  - The oversize penalty 4n/beta applies exactly when |S| > 4 s*.
  - A rank-deficient subset is charged for its rank, not its size, in the rank term.
  - log_ratio equals the difference of freshly computed weights, whether it goes through
    the one-column update path or not.
  - The exact distribution is normalized and the table accessors agree with it.
  - p=1 warns; more states than the oracle cap are refused.
"""
import math

import numpy as np
import pytest

from ewachain.errors import StateSpaceTooLarge
from ewachain.posterior import Posterior, exact_distribution, log_ratio, log_weight
from ewachain.subsets import Subset, enumerate_states
from tests.helpers import gaussian_design, make_config, make_instance, orthogonal_design, subset


def test_empty_and_singleton_weights():
    X = orthogonal_design(16, 5)
    inst = make_instance(X, [2], 3.0)
    cfg = make_config(inst, D=7.0)
    post = Posterior(inst, cfg)
    empty = post.log_weight(Subset.empty(5))
    assert (empty.g, empty.m, empty.log_w, empty.rank) == (0.0, 0.0, 0.0, 0)

    single = post.log_weight(subset([2], 5))
    expected_g = float(X[:, 2] @ inst.Y) ** 2 / 16 / cfg.beta
    assert single.g == pytest.approx(expected_g, rel=1e-12)
    assert single.m == pytest.approx(7.0 * math.log(5) + 2.0 / cfg.beta, rel=1e-12)
    assert single.rank == 1


def test_oversize_penalty():
    X = gaussian_design(16, 6, seed=1)
    inst = make_instance(X, [0], 2.0)
    cfg = make_config(inst, D=2.0)
    post = Posterior(inst, cfg)
    four, five = subset([0, 1, 2, 3], 6), subset([0, 1, 2, 3, 4], 6)
    assert post.log_weight(four).m == pytest.approx(2.0 * 4 * math.log(6) + 2 * 4 / 2.0)
    assert post.log_weight(five).m == pytest.approx(2.0 * 5 * math.log(6) + 2 * 5 / 2.0 + 4 * 16 / 2.0)


def test_rank_deficient_subset():
    X = gaussian_design(10, 3, seed=4)
    X = np.column_stack([X, X[:, 1]])
    inst = make_instance(X, [0], 1.0)
    cfg = make_config(inst, D=1.0)
    weight = Posterior(inst, cfg).log_weight(subset([1, 3], 4))
    assert weight.rank == 1
    assert weight.m == pytest.approx(1.0 * 2 * math.log(4) + 2.0 * 1 / cfg.beta)


def test_log_ratio_matches_fresh_weights(spread):
    inst, cfg = spread
    post = Posterior(inst, cfg)
    S = subset([0, 2], 4)
    for S2 in list(enumerate_states(4)):
        fresh = log_weight(S2, inst, cfg).log_w - log_weight(S, inst, cfg).log_w
        assert post.log_ratio(S, S2) == pytest.approx(fresh, rel=1e-9, abs=1e-9)
    assert post.log_ratio(S, S) == 0.0
    assert log_ratio(S, S.flip(1), inst, cfg) == pytest.approx(post.log_ratio(S, S.flip(1)), abs=1e-9)


def test_exact_distribution(spread):
    inst, cfg = spread
    table = Posterior(inst, cfg).table()
    assert table.pi.sum() == pytest.approx(1.0, abs=1e-12)
    dist = exact_distribution(inst, cfg)
    assert len(dist) == 16
    assert sum(dist.values()) == pytest.approx(1.0, abs=1e-12)
    best = max(dist, key=dist.get)
    assert table.prob(best) == pytest.approx(dist[best])
    assert table.log_mass(table.states) == pytest.approx(0.0, abs=1e-12)
    assert table.log_mass([]) == -math.inf
    assert np.allclose(table.log_w - table.log_pi, table.log_w[0] - table.log_pi[0])


def test_p_equal_one_warns():
    X = np.ones((4, 1))
    inst = make_instance(X, [0], 1.0)
    cfg = make_config(inst)
    with pytest.warns(UserWarning, match="p=1"):
        Posterior(inst, cfg)


def test_oracle_cap():
    inst = make_instance(gaussian_design(8, 13, seed=0), [0], 1.0)
    cfg = make_config(inst)
    with pytest.raises(StateSpaceTooLarge):
        Posterior(inst, cfg).table()
