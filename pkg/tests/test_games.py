import json

import pytest
from hypothesis import given, strategies as st

from gamedyn import (
    CapacityError,
    ConfigError,
    GameDefinition,
    best_response_set,
    enumerate_nash,
    hamming,
    is_nash,
    neighborhood,
    table_game,
    verify_potential,
)
from gamedyn.fixtures import game_from_dict, load_fixture
from gamedyn.games import find_equal_potential_edge


def test_profile_indexing_roundtrip(game_g2):
    for idx, a in enumerate(game_g2.profiles()):
        assert game_g2.profile_index(a) == idx
        assert game_g2.index_to_profile(idx) == a


def test_player_zero_least_significant():
    g = table_game([2, 3], potential=list(range(6)))
    assert g.profile_index((1, 0)) == 1
    assert g.profile_index((0, 1)) == 2
    assert g.index_to_profile(5) == (1, 2)


@given(st.lists(st.integers(2, 4), min_size=1, max_size=4), st.data())
def test_indexing_bijective(sizes, data):
    g = GameDefinition(tuple(sizes), lambda i, a: 0.0)
    idx = data.draw(st.integers(0, g.num_profiles - 1))
    assert g.profile_index(g.index_to_profile(idx)) == idx


def test_hamming():
    assert hamming((0, 1, 2), (0, 1, 2)) == 0
    assert hamming((0, 1), (1, 1)) == 1
    assert hamming((0, 0), (1, 1)) == 2


def test_g2_nash_and_potential(game_g2):
    ok, witness = verify_potential(game_g2)
    assert ok and witness is None
    assert enumerate_nash(game_g2) == frozenset({(1, 1)})
    assert is_nash(game_g2, (1, 1))
    assert not is_nash(game_g2, (0, 0))


def test_g3_best_responses(game_g3):
    assert best_response_set(game_g3, 0, (0,)) == {2}
    assert enumerate_nash(game_g3) == frozenset({(2,)})


def test_best_response_tie_tolerance():
    g = table_game([2], potential=[1.0, 1.0 + 1e-12])
    assert best_response_set(g, 0, (0,)) == {0, 1}


def test_neighborhood(game_g2):
    assert neighborhood(game_g2, (0, 0)) == {(1, 0), (0, 1)}
    assert neighborhood(game_g2, (0, 0), i=0) == {(0, 0), (1, 0)}


def test_equal_potential_edge_detection():
    clean = table_game([2, 2], potential=[0, 1, 2, 4])
    assert find_equal_potential_edge(clean) is None
    tied = table_game([2, 2], potential=[0, 0, 2, 4])
    edge = find_equal_potential_edge(tied)
    assert edge is not None and hamming(*edge) == 1


def test_capacity_cap():
    g = GameDefinition((2,) * 25, lambda i, a: 0.0)
    with pytest.raises(CapacityError):
        g.check_cap()


def test_broken_potential_detected():
    g = table_game(
        [2, 2],
        utilities=[[0, 0], [1, 1], [2, 2], [4, 3]],
        potential=[0, 1, 2, 4],
    )
    ok, witness = verify_potential(g)
    assert not ok
    assert witness is not None


def test_table_game_validation():
    with pytest.raises(ValueError):
        table_game([2, 2], potential=[0, 1])
    with pytest.raises(ValueError):
        table_game([2, 2])


def test_fixture_roundtrip(tmp_path):
    doc = {"type": "table", "action_sizes": [2, 2], "potential": [0, 1, 2, 4]}
    path = tmp_path / "game.json"
    path.write_text(json.dumps(doc))
    g = load_fixture(path)
    assert enumerate_nash(g) == frozenset({(1, 1)})


def test_fixture_errors(tmp_path):
    with pytest.raises(ConfigError):
        game_from_dict({"type": "builtin", "name": "nope"})
    with pytest.raises(ConfigError):
        game_from_dict({"type": "mystery"})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ConfigError):
        load_fixture(bad)
