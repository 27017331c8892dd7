"""Built-in game fixtures and the fixture file format.

Fixture files are JSON documents with a ``type`` field:

``{"type": "builtin", "name": "g2"}``
    One of the named families below.

``{"type": "table", "action_sizes": [...], "utilities": [[...], ...],
   "potential": [...]}``
    Explicit tables, one row per canonical profile index; ``utilities`` may
    be omitted for identical-interest games.

``{"type": "coverage", "d": ..., "alpha": ..., "r_c": ...,
   "sensors": [{"x": ..., "y": ..., "radii": [0, ...]}, ...]}``
    A sensor deployment.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Union

import numpy as np

from .coverage import CoverageGame, SensorConfig
from .errors import ConfigError
from .games import GameDefinition, table_game

# Smallest integer radius for which the three-sensor deployment below has
# Nash set exactly {(0,1,1), (1,0,1)} with (1,0,1) the strict potential
# maximizer while keeping potentials distinct across all Hamming-1 edges
# (radius 4 yields the right equilibria but ties two neighbor potentials).
THREE_SENSOR_RADIUS = 5.0
THREE_SENSOR_LOCATIONS = ((9.03, 3.98), (8.4, 1.4), (1.96, 6.35))


def g2() -> GameDefinition:
    """2x2 identical-interest game with a unique Nash equilibrium at (1,1)."""
    # potential by profile index, player 0 least significant:
    # (0,0)=0, (1,0)=1, (0,1)=2, (1,1)=4
    return table_game([2, 2], potential=[0.0, 1.0, 2.0, 4.0])


def g3() -> GameDefinition:
    """Single player, three actions, utilities 0/1/3."""
    return table_game([3], potential=[0.0, 1.0, 3.0])


def three_sensor() -> CoverageGame:
    """Three sensors on a 10x10 grid with on/off actions at the calibrated
    radius; an 8-state coverage game with two equilibria."""
    config = SensorConfig(
        d=10,
        locations=THREE_SENSOR_LOCATIONS,
        radii_options=((0.0, THREE_SENSOR_RADIUS),) * 3,
        alpha=0.2,
    )
    return CoverageGame(config)


def random_potential_game(seed: int, max_players: int = 3, max_actions: int = 3) -> GameDefinition:
    """Seeded identical-interest game whose potential is a random permutation
    of 0..|A|-1, so all potentials are distinct integers."""
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, max_players + 1))
    sizes = [int(rng.integers(2, max_actions + 1)) for _ in range(n)]
    count = int(np.prod(sizes))
    potential = [float(v) for v in rng.permutation(count)]
    return table_game(sizes, potential=potential)


BUILTINS = {"g2": g2, "g3": g3, "three_sensor": three_sensor}

GameLike = Union[GameDefinition, CoverageGame]


def as_game(obj: GameLike) -> GameDefinition:
    return obj.game if isinstance(obj, CoverageGame) else obj


def load_fixture(path: Union[str, Path]) -> GameLike:
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read fixture {path}: {exc}") from exc
    return game_from_dict(doc)


def game_from_dict(doc: dict) -> GameLike:
    kind = doc.get("type")
    if kind == "builtin":
        name = doc.get("name")
        if name not in BUILTINS:
            raise ConfigError(f"unknown builtin game {name!r}")
        return BUILTINS[name]()
    if kind == "table":
        try:
            return table_game(
                doc["action_sizes"],
                utilities=doc.get("utilities"),
                potential=doc.get("potential"),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad table fixture: {exc}") from exc
    if kind == "coverage":
        try:
            config = SensorConfig(
                d=int(doc["d"]),
                locations=tuple((float(s["x"]), float(s["y"])) for s in doc["sensors"]),
                radii_options=tuple(
                    tuple(float(r) for r in s["radii"]) for s in doc["sensors"]
                ),
                alpha=float(doc["alpha"]),
                r_c=float(doc.get("r_c", 0.0)),
            )
        except (KeyError, ValueError, TypeError) as exc:
            raise ConfigError(f"bad coverage fixture: {exc}") from exc
        return CoverageGame(config)
    raise ConfigError(f"unknown fixture type {kind!r}")


def coverage_fixture_dict(config: SensorConfig) -> dict:
    return {
        "type": "coverage",
        "d": config.d,
        "alpha": config.alpha,
        "r_c": config.r_c,
        "sensors": [
            {"x": x, "y": y, "radii": list(radii)}
            for (x, y), radii in zip(config.locations, config.radii_options)
        ],
    }


def save_coverage_fixture(config: SensorConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(json.dumps(coverage_fixture_dict(config), indent=2, sort_keys=True) + "\n")
