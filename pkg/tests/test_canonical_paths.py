"""
Tests for the G-map, the G-tree and the canonical-path bounds:

  - G drops the smallest extra column of a superset of T, adds the best-projecting missing
    column otherwise, and sends states outside U to T_hat; T itself has no parent.
  - A hand-enumerated three-column tree: parents, depths, diameter, Lambda sets and paths.
  - An initializer outside U that maps to itself is reported as a cycle.
  - Exact edge loadings equal pi(Lambda)(1 - pi(Lambda))/Q and the Sinclair bound dominates
    1/gap; on two states the two coincide.
  - Far from the good set (T_hat empty, strong signal) loadings exceed the float range; the
    Sinclair bound is then compared in logs and reported as inf.
  - On the golden instance the state-wise inequalities, the path-length cases and the hop
    growth all hold; with a weak signal and a small D the ratio failures are reported.
"""
import math

import numpy as np
import pytest

from ewachain.canonical_paths import (PiGmapCheck, RatioLemmaCheck, build_tree, canonical_path, check_ratio_lemma,
                                      edge_loadings, g_map, hop_growth_check, in_U, lambda_set, log_sinclair_bound,
                                      max_log_loading, path_length_cases, sinclair_bound)
from ewachain.errors import CycleDetected, RootHasNoParent, StateSpaceTooLarge
from ewachain.oracle import build_exact_chain, log_inverse_gap, spectral_gap
from ewachain.posterior import Posterior
from ewachain.projection import dense_projector
from ewachain.subsets import Subset, enumerate_states
from tests.helpers import gaussian_design, make_config, make_instance, orthogonal_design, subset


@pytest.fixture(scope="module")
def small_tree():
    inst = make_instance(orthogonal_design(4, 3), [1], 3.0)
    cfg = make_config(inst)
    return inst, cfg, build_tree(inst, cfg)


def test_g_map_rules():
    X = gaussian_design(20, 6, seed=1)
    inst = make_instance(X, [0, 3], 2.0, s_star=2)
    cfg = make_config(inst, T_hat=[0, 3, 5])
    with pytest.raises(RootHasNoParent):
        g_map(inst.T, inst, cfg)
    assert g_map(subset([0, 2, 3, 4], 6), inst, cfg) == subset([0, 3, 4], 6)
    far = subset([1, 2, 4, 5, 0], 6)
    assert far.difference(inst.T).size == 4 <= 3 * 2
    assert g_map(far, inst, cfg) == Subset.full(6)

    S = subset([1], 6)
    signal = inst.signal
    gains = {i: float(signal @ dense_projector(X, S.flip(i)) @ signal) for i in (0, 3)}
    best = max(gains, key=gains.get)
    assert g_map(S, inst, cfg) == S.flip(best)


def test_g_map_jumps_outside_U():
    inst = make_instance(gaussian_design(20, 6, seed=2), [0], 2.0)
    cfg = make_config(inst, T_hat=[0, 5])
    S = subset([1, 2, 3, 4], 6)
    assert not in_U(S, inst.T, 1)
    assert g_map(S, inst, cfg) == cfg.T_hat


def test_small_tree_by_hand(small_tree):
    _, _, tree = small_tree
    depth = {S.bits: d for S, d in tree.depth.items()}
    assert depth == {0b000: 1, 0b001: 2, 0b010: 0, 0b011: 1, 0b100: 2, 0b101: 3, 0b110: 1, 0b111: 2}
    parent = {S.bits: up.bits for S, up in tree.parent.items()}
    assert parent == {0b000: 0b010, 0b001: 0b011, 0b011: 0b010, 0b100: 0b110, 0b110: 0b010,
                      0b101: 0b111, 0b111: 0b110}
    assert len(tree.edges) == 7
    assert tree.max_depth == 3
    # {0,2} -> {0,1,2} -> {1,2} -> {1} <- {0,1} <- {0}
    assert tree.diameter == 5


def test_lambda_sets_and_paths(small_tree):
    _, _, tree = small_tree
    T = tree.root
    assert lambda_set(T, tree) == set(tree.states)
    assert lambda_set(subset([0], 3), tree) == {subset([0], 3)}
    assert lambda_set(subset([1, 2], 3), tree) == {subset(s, 3) for s in ([1, 2], [2], [0, 1, 2], [0, 2])}
    assert canonical_path(T, T, tree) == [T]
    path = canonical_path(subset([0], 3), subset([0, 2], 3), tree)
    assert [S.bits for S in path] == [0b001, 0b011, 0b010, 0b110, 0b111, 0b101]
    sibling = canonical_path(Subset.empty(3), subset([0, 1], 3), tree)
    assert [S.bits for S in sibling] == [0b000, 0b010, 0b011]
    for I in tree.states:
        for F in tree.states:
            path = canonical_path(I, F, tree)
            assert path[0] == I and path[-1] == F
            assert all((a, b) in tree.parent.items() or (b, a) in tree.parent.items() for a, b in zip(path, path[1:]))


def test_cycle_detected():
    inst = make_instance(gaussian_design(20, 5, seed=3), [0], 2.0)
    cfg = make_config(inst, T_hat=[1, 2, 3, 4])
    with pytest.raises(CycleDetected):
        build_tree(inst, cfg)


def test_tree_cap():
    inst = make_instance(gaussian_design(8, 13, seed=0), [0], 1.0)
    with pytest.raises(StateSpaceTooLarge):
        build_tree(inst, make_config(inst))


def test_initializer_collects_outside_states():
    inst = make_instance(gaussian_design(20, 5, seed=4), [0], 2.0)
    cfg = make_config(inst, T_hat=[0, 1])
    tree = build_tree(inst, cfg)
    assert len(tree.depth) == 32
    outside = [S for S in enumerate_states(5) if S != inst.T and not in_U(S, inst.T, 1)]
    assert outside
    assert set(outside) <= lambda_set(cfg.T_hat, tree)
    cases = path_length_cases(tree, inst, cfg)
    assert cases["b"]["states"] == 1
    assert cases["c"]["max_depth"] <= cases["c"]["bound"]


def test_loadings_match_lambda_formula(spread):
    inst, cfg = spread
    tree = build_tree(inst, cfg)
    loadings = edge_loadings(inst, cfg, tree)
    assert len(loadings) == 2 * len(tree.edges)
    for load in loadings:
        assert load.within_bound
        assert load.log_rho == pytest.approx(load.log_analytic, abs=1e-9)
    chain = build_exact_chain(inst, cfg)
    assert 1 / spectral_gap(chain) <= sinclair_bound(tree, loadings) * (1 + 1e-9)
    assert max_log_loading(loadings) == max(load.log_rho for load in loadings)


def test_sinclair_bound_beyond_float_range():
    inst = make_instance(orthogonal_design(32, 6), [0], 10.0)
    cfg = make_config(inst, T_hat=[])
    tree = build_tree(inst, cfg)
    loadings = edge_loadings(inst, cfg, tree)
    log_bound = log_sinclair_bound(tree, loadings)
    assert log_bound > math.log(np.finfo(float).max)
    assert sinclair_bound(tree, loadings) == math.inf
    assert max(load.rho for load in loadings) == math.inf
    assert log_bound == pytest.approx(math.log(tree.diameter) + max_log_loading(loadings))
    assert log_inverse_gap(build_exact_chain(inst, cfg)) <= log_bound


def test_two_state_bound_is_tight():
    inst = make_instance(np.ones((4, 1)), [0], 1.0)
    cfg = make_config(inst)
    with pytest.warns(UserWarning, match="p=1"):
        table = Posterior(inst, cfg).table()
    tree = build_tree(inst, cfg)
    loadings = edge_loadings(inst, cfg, tree, table=table)
    chain = build_exact_chain(inst, cfg, table=table)
    assert tree.diameter == 1
    assert sinclair_bound(tree, loadings) == pytest.approx(1 / spectral_gap(chain), rel=1e-9)


def test_golden_statewise_checks(golden_runner):
    runner = golden_runner
    inst, cfg, tree, table = runner.inst, runner.cfg, runner.tree, runner.table
    assert runner.on_good_set
    summary, errors = PiGmapCheck(inst, cfg, tree, table=table).data
    assert errors == []
    assert summary["states"] == 63
    summary, errors = check_ratio_lemma(inst, cfg, tree, table=table)
    assert errors == []
    counts = summary["counts"]
    assert counts["that"] == counts["stronger"] == 64
    assert counts["U"] + counts["U_comp"] == 63 and counts["gmap_UU"] == counts["U"]
    cases = path_length_cases(tree, inst, cfg)
    assert all(cases[key]["holds"] for key in ("a", "b", "c", "d", "diameter"))
    growth = hop_growth_check(tree, inst, cfg, table=table)
    assert growth["holds"]
    assert math.exp(max_log_loading(runner.loadings)) <= 6 * inst.p


def test_ratio_failures_are_reported():
    inst = make_instance(orthogonal_design(16, 4), [0], 0.1, noise=False)
    cfg = make_config(inst, D=0.1)
    check = RatioLemmaCheck(inst, cfg, build_tree(inst, cfg))
    summary, errors = check.data
    assert not check.passed
    assert any(error.startswith("[gmap_UU] fails for S={}") for error in errors)
    assert summary["min_margins"]["gmap_UU"] < 0


def test_dot_export(small_tree):
    _, _, tree = small_tree
    dot = tree.to_dot()
    assert dot.startswith("digraph gtree {")
    assert dot.count(" -> ") == 7
    assert '"2" [label="2\\n|S|=1", shape=doublecircle];' in dot
