import pytest

from gamedyn import g2, g3, random_potential_game, three_sensor


@pytest.fixture(scope="session")
def game_g2():
    return g2()


@pytest.fixture(scope="session")
def game_g3():
    return g3()


@pytest.fixture(scope="session")
def sensor_game():
    return three_sensor()


@pytest.fixture(scope="session")
def random_games():
    """The seeded batch of small potential games used by the property tests."""
    return [random_potential_game(seed) for seed in range(20)]


@pytest.fixture(scope="session")
def small_game_set(game_g2, game_g3, sensor_game, random_games):
    return [game_g2, game_g3, sensor_game.game, *random_games]
