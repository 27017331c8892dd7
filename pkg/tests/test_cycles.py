import itertools
import math

import numpy as np
import pytest

from gamedyn import (
    LLL,
    ML,
    build_transition_model,
    communication_altitude,
    compare_hierarchies,
    cycle_altitude,
    decompose,
    decompose_model,
    empirical_exit_validation,
    model_altitudes,
    verify_structure,
)
from gamedyn.cycles import altitude_table, _strongly_connected_components


def _g3_tables(game_g3, kernel):
    m = build_transition_model(game_g3, kernel, 1.0)
    phi = np.array([game_g3.potential(a) for a in game_g3.profiles()])
    return m.cost_matrix(), phi


def test_scc():
    adj = [[1], [2], [0], [4], []]
    comps = {frozenset(c) for c in _strongly_connected_components(adj)}
    assert comps == {frozenset({0, 1, 2}), frozenset({3}), frozenset({4})}


def test_decompose_g3_ml(game_g3):
    h = decompose_model(build_transition_model(game_g3, ML, 1.0))
    assert [sorted(map(sorted, lv.partition)) for lv in h.levels][1] == [[0], [1, 2]]
    node = h.nodes[frozenset({1, 2})]
    assert node.exit_height == 3
    assert node.mixing_height == 2
    assert node.phi == 3
    lv1 = h.levels[1]
    i = lv1.partition.index(frozenset({1, 2}))
    j = lv1.partition.index(frozenset({0}))
    assert lv1.V[(i, j)] == 3  # 2 + min(1, 1)


def test_decompose_g3_lll(game_g3):
    h = decompose_model(build_transition_model(game_g3, LLL, 1.0))
    assert sorted(map(sorted, h.levels[1].partition)) == [[0], [1, 2]]
    assert h.nodes[frozenset({1, 2})].exit_height == 3  # 2 + min(3, 1)


def test_eq9_arithmetic_independent(game_g3):
    # recompute V^1({1,2},{0}) directly from the level-0 tables
    h = decompose_model(build_transition_model(game_g3, ML, 1.0))
    lv0 = h.levels[0]
    he = {min(s): he for s, he in zip(lv0.partition, lv0.He)}
    hm = max(he[1], he[2])
    vstar_to_0 = min(lv0.Vstar[(1, 0)], lv0.Vstar[(2, 0)])
    assert hm + vstar_to_0 == 3


def test_degenerate_single_cycle():
    # symmetric two-state chain with zero costs everywhere: closed and
    # strongly connected at level 0, so one coarsening step suffices
    V = np.array([[np.inf, 0.0], [0.0, np.inf]])
    h = decompose(V, [0.0, 0.0], rev_tol=1.0)
    assert len(h.levels) == 2
    assert h.root.members == frozenset({0, 1})


def test_reducible_rejected():
    V = np.full((3, 3), np.inf)
    V[0, 1] = 0.0
    V[1, 0] = 1.0
    with pytest.raises(ValueError):
        decompose(V, [1.0, 0.0, 5.0])


def test_weak_reversibility_precondition():
    V = np.array([[np.inf, 0.0], [0.5, np.inf]])
    with pytest.raises(ValueError):
        decompose(V, [0.0, 0.0])


def test_partition_refinement(small_game_set):
    for g in small_game_set[:8]:
        for kernel in (LLL, ML):
            h = decompose_model(build_transition_model(g, kernel, 1.0))
            for fine, coarse in zip(h.levels, h.levels[1:]):
                for s in fine.partition:
                    assert any(s <= t for t in coarse.partition)
            assert h.levels[-1].partition == [frozenset(range(len(h.phi)))]


def test_altitudes_g3(game_g3):
    V, phi = _g3_tables(game_g3, ML)
    assert communication_altitude(V, phi, 1, 2) == 1.0
    assert communication_altitude(V, phi, 2, 0) == 0.0
    assert communication_altitude(V, phi, 2, 1) == communication_altitude(V, phi, 1, 2)
    table = altitude_table(V, phi)
    assert cycle_altitude(table, frozenset({1, 2})) == 1.0


def test_altitude_disconnected():
    V = np.full((2, 2), np.inf)
    with pytest.raises(ValueError):
        communication_altitude(V, [0.0, 0.0], 0, 1)


def _brute_force_altitude(V, phi, x, y):
    n = len(phi)
    best = -math.inf
    others = [v for v in range(n) if v not in (x, y)]
    for r in range(len(others) + 1):
        for mid in itertools.permutations(others, r):
            path = (x, *mid, y)
            bottleneck = min(
                phi[u] - V[u, v] for u, v in zip(path, path[1:])
            )
            best = max(best, bottleneck)
    return best


def test_altitude_brute_force_oracle(game_g2, game_g3):
    for g, kernel in [(game_g2, ML), (game_g2, LLL), (game_g3, ML)]:
        m = build_transition_model(g, kernel, 0.7)
        phi = np.array([g.potential(a) for a in g.profiles()])
        V = m.cost_matrix()
        table = altitude_table(V, phi)
        for x in range(len(phi)):
            for y in range(len(phi)):
                if x != y:
                    assert table[x, y] == pytest.approx(
                        _brute_force_altitude(V, phi, x, y)
                    )


def test_structure_g3(game_g3):
    m = build_transition_model(game_g3, ML, 1.0)
    h = decompose_model(m)
    rep = verify_structure(h, model_altitudes(m))
    assert rep.passed, rep.violations
    forms = rep.exit_height_forms[(1, 2)]
    assert forms["algorithm"] == 3.0
    assert forms["peak_form_matches"]
    assert not forms["min_form_matches"]  # transcribed variant disagrees


def test_structure_full_set(small_game_set):
    for g in small_game_set:
        for kernel in (LLL, ML):
            m = build_transition_model(g, kernel, 1.0)
            rep = verify_structure(decompose_model(m), model_altitudes(m))
            assert rep.passed, (kernel, rep.violations)


def test_compare_g3(game_g3):
    lll = build_transition_model(game_g3, LLL, 1.0)
    ml = build_transition_model(game_g3, ML, 1.0)
    c = compare_hierarchies(
        decompose_model(lll), decompose_model(ml), model_altitudes(lll), model_altitudes(ml)
    )
    assert c.passed
    shared = {s.members: s for s in c.shared}
    assert (1, 2) in shared
    assert shared[(1, 2)].he_lll == shared[(1, 2)].he_ml == 3  # equality allowed


def test_compare_mismatched_spaces(game_g2, game_g3):
    h2 = decompose_model(build_transition_model(game_g2, ML, 1.0))
    h3 = decompose_model(build_transition_model(game_g3, ML, 1.0))
    with pytest.raises(ValueError):
        compare_hierarchies(h2, h3)


def test_empirical_exit_smoke(game_g3):
    m = build_transition_model(game_g3, ML, 0.5)
    val = empirical_exit_validation(
        m, frozenset({1, 2}), [0.6, 0.5, 0.4], trials=300, seed=17,
        expected_exit_height=3.0,
    )
    assert val.start_state == 1  # minimal-potential member
    assert not val.truncated
    assert 2.0 <= val.slope <= 4.0
    assert val.r_squared > 0.95
    again = empirical_exit_validation(
        m, frozenset({1, 2}), [0.6, 0.5, 0.4], trials=300, seed=17,
        expected_exit_height=3.0,
    )
    assert again.mean_exit_times == val.mean_exit_times
