import math

import numpy as np
import pytest

from gamedyn import (
    LLL,
    ML,
    CapacityError,
    GameDefinition,
    RejectedGameError,
    build_transition_model,
    compute_gamma,
    lll_step_distribution,
    ml_accept_probability,
    simulate_path,
    table_game,
    verify_regularity,
)
from gamedyn.dynamics import mix_seed, splitmix64


def test_lll_distribution_limits(game_g3):
    cold = lll_step_distribution(game_g3, 0, (0,), 1e-4)
    assert cold[2] >= 1 - 1e-6
    hot = lll_step_distribution(game_g3, 0, (0,), 1e6)
    assert np.allclose(hot, 1 / 3, atol=1e-5)


def test_lll_equal_best_responses_split_evenly():
    g = table_game([2, 2], utilities=[[1, 0], [1, 0], [1, 0], [1, 0]])
    p = lll_step_distribution(g, 0, (0, 0), 0.01)
    assert p[0] == pytest.approx(p[1])


def test_ml_accept(game_g3):
    assert ml_accept_probability(game_g3, 0, (0,), 2, 1.0) == 1.0
    assert ml_accept_probability(game_g3, 0, (2,), 1, 1.0) == pytest.approx(math.exp(-2))
    assert ml_accept_probability(game_g3, 0, (1,), 1, 1.0) == 1.0


def test_temperature_validation(game_g3):
    with pytest.raises(ValueError):
        lll_step_distribution(game_g3, 0, (0,), 0.0)
    with pytest.raises(ValueError):
        ml_accept_probability(game_g3, 0, (0,), 1, -1.0)
    with pytest.raises(ValueError):
        build_transition_model(game_g3, ML, 0.0)


def test_g3_ml_transition_probabilities(game_g3):
    m = build_transition_model(game_g3, ML, 1.0)
    assert m.probability((0,), (1,)) == pytest.approx(1 / 3)
    assert m.probability((0,), (2,)) == pytest.approx(1 / 3)
    assert m.probability((2,), (0,)) == pytest.approx(math.exp(-3) / 3)


def test_row_stochastic(small_game_set):
    for g in small_game_set[:6]:
        for kernel in (LLL, ML):
            m = build_transition_model(g, kernel, 0.7)
            rows = np.asarray(m.P.sum(axis=1)).ravel()
            assert np.abs(rows - 1).max() <= 1e-12


def test_costs(game_g3, game_g2):
    lll = build_transition_model(game_g3, LLL, 1.0)
    ml = build_transition_model(game_g3, ML, 1.0)
    assert lll.cost((0,), (1,)) == pytest.approx(2.0)  # best response is action 2
    assert ml.cost((0,), (1,)) == 0.0
    g2ml = build_transition_model(game_g2, ML, 1.0)
    assert g2ml.cost((1, 1), (0, 1)) == pytest.approx(2.0)
    # structurally impossible: both coordinates change
    assert g2ml.cost((0, 0), (1, 1)) == math.inf
    assert g2ml.probability((0, 0), (1, 1)) == 0.0
    with pytest.raises(ValueError):
        g2ml.cost((0, 0), (0, 0))


def test_gamma_constants(game_g2):
    gamma_ml, exact = compute_gamma(game_g2, ML, 1.0)
    assert gamma_ml == pytest.approx(1 / 4) and exact
    gamma_lll, exact = compute_gamma(game_g2, LLL, 1e-4)
    assert exact
    # T -> 0: Z_max -> |B_i| = 1 so gamma -> 1/n
    assert gamma_lll == pytest.approx(1 / 2, rel=1e-6)
    assert gamma_lll >= gamma_ml


def test_gamma_fallback_above_cap():
    g = GameDefinition((2,) * 12, lambda i, a: 0.0)
    gamma, exact = compute_gamma(g, LLL, 1.0, cap=2 ** 10)
    assert not exact
    assert gamma == pytest.approx(1 / (12 * 2))


def test_rejected_game():
    tied = table_game([2, 2], potential=[0, 0, 2, 4])
    with pytest.raises(RejectedGameError):
        build_transition_model(tied, ML, 1.0)


def test_capacity_error():
    g = GameDefinition((2,) * 20, lambda i, a: 0.0)
    with pytest.raises(CapacityError):
        build_transition_model(g, ML, 1.0, cap=2 ** 10)


def test_detailed_balance_ml(game_g2):
    m = build_transition_model(game_g2, ML, 1.0)
    phi = np.array([game_g2.potential(a) for a in game_g2.profiles()])
    pi = np.exp(phi - phi.max())
    pi /= pi.sum()
    P = m.dense()
    flows = pi[:, None] * P
    assert np.allclose(flows, flows.T, rtol=1e-12, atol=1e-15)


def test_regularity(small_game_set):
    for g in small_game_set[:5]:
        for T in (0.1, 1.0):
            rep = verify_regularity(build_transition_model(g, LLL, T))
            assert rep.passed, rep.witnesses


def test_simulate_determinism(game_g2):
    a = simulate_path(game_g2, ML, 0.5, (0, 0), 200, seed=42)
    b = simulate_path(game_g2, ML, 0.5, (0, 0), 200, seed=42)
    assert a.states == b.states
    assert a.steps == b.steps
    c = simulate_path(game_g2, ML, 0.5, (0, 0), 0, seed=42)
    assert c.states == [0]


def test_simulate_hamming_steps(game_g2):
    tr = simulate_path(game_g2, LLL, 1.0, (0, 0), 300, seed=7)
    for s, t in zip(tr.states, tr.states[1:]):
        a = game_g2.index_to_profile(s)
        b = game_g2.index_to_profile(t)
        assert sum(x != y for x, y in zip(a, b)) <= 1


def test_simulate_concentrates_cold(game_g3):
    tr = simulate_path(game_g3, ML, 0.05, (0,), 10 ** 4, seed=3)
    tail = tr.states[5000:]
    freq = sum(1 for s in tail if s == 2) / len(tail)
    assert freq > 0.95


def test_trace_csv(game_g2, tmp_path):
    tr = simulate_path(game_g2, ML, 1.0, (0, 0), 10, seed=1)
    path = tmp_path / "trace.csv"
    tr.to_csv(game_g2, path)
    lines = path.read_text().strip().split("\n")
    assert lines[0] == "step,state_index,player,proposed_action,accepted,potential"
    assert len(lines) == 12


def test_seed_mixing():
    assert splitmix64(0) != splitmix64(1)
    seen = {mix_seed(123, k) for k in range(1000)}
    assert len(seen) == 1000
