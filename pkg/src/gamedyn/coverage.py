"""Sensor coverage game on an integer grid with marginal-contribution utilities.

Each sensor chooses a sensing radius from a finite list whose first entry is
0 (off).  The global payoff is covered-grid-point count minus activation
costs; per-sensor utilities are marginal contributions against the off
action, which makes the global payoff an exact potential.

Grid coverage is represented with per-(sensor, radius) bitmasks over the
(d+1)^2 grid points so utility queries are a handful of big-int operations.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .games import GameDefinition, Profile

Point = tuple[int, int]


@dataclass(frozen=True)
class SensorConfig:
    """Static deployment data: grid extent, locations, radii, cost coefficient.

    ``r_c`` is the communication range; it is recorded for completeness but
    plays no role in the dynamics.
    """

    d: int
    locations: tuple[tuple[float, float], ...]
    radii_options: tuple[tuple[float, ...], ...]
    alpha: float
    r_c: float = 0.0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("grid extent d must be >= 1")
        if len(self.locations) != len(self.radii_options):
            raise ValueError("one radii list per sensor required")
        for x, y in self.locations:
            if not (0 <= x <= self.d and 0 <= y <= self.d):
                raise ValueError(f"location ({x},{y}) outside [0,{self.d}]^2")
        for radii in self.radii_options:
            if not radii or radii[0] != 0:
                raise ValueError("radius 0 (off) must be the first action")
            if any(r <= 0 for r in radii[1:]):
                raise ValueError("non-off radii must be strictly positive")
            if list(radii) != sorted(radii):
                raise ValueError("radii must be sorted ascending")
        if not 0 < self.alpha <= 1:
            raise ValueError("alpha must lie in (0,1]")

    @property
    def n(self) -> int:
        return len(self.locations)


def r_max_points(r: float) -> int:
    """Lattice offsets (dx,dy) with dx^2+dy^2 <= r^2: the position-independent
    maximum number of grid points a radius-r footprint can cover."""
    if r < 0:
        raise ValueError("radius must be nonnegative")
    rr = int(math.floor(r))
    count = 0
    for dx in range(-rr, rr + 1):
        for dy in range(-rr, rr + 1):
            if dx * dx + dy * dy <= r * r:
                count += 1
    return count


def sensor_cost(config: SensorConfig, i: int, a_i: float) -> int:
    """ceil(alpha * R_max(a_i)); zero for the off action."""
    if a_i not in config.radii_options[i]:
        raise ValueError(f"radius {a_i} not an action of sensor {i}")
    if a_i == 0:
        return 0
    # back off a hair before ceil: alpha*R can land epsilon above an integer
    return math.ceil(config.alpha * r_max_points(a_i) - 1e-9)


def _footprint_mask(config: SensorConfig, i: int, radius: float) -> int:
    """Bitmask of grid points within the closed disk of ``radius`` around
    sensor i; bit index is k*(d+1)+l for grid point (k,l)."""
    if radius == 0:
        return 0
    x, y = config.locations[i]
    d = config.d
    mask = 0
    for k in range(d + 1):
        dx2 = (k - x) ** 2
        if dx2 > radius * radius:
            continue
        for l in range(d + 1):
            if dx2 + (l - y) ** 2 <= radius * radius:
                mask |= 1 << (k * (d + 1) + l)
    return mask


class CoverageGame:
    """A :class:`SensorConfig` together with its induced potential game."""

    def __init__(self, config: SensorConfig):
        self.config = config
        n = config.n
        self.masks = [
            [_footprint_mask(config, i, r) for r in config.radii_options[i]]
            for i in range(n)
        ]
        self.costs = [
            [sensor_cost(config, i, r) for r in config.radii_options[i]]
            for i in range(n)
        ]
        self._payoff_cache: dict[Profile, int] = {}
        self.game = GameDefinition(
            action_sizes=tuple(len(r) for r in config.radii_options),
            utility=self._utility,
            potential=self._global_payoff,
        )

    def _union_mask(self, a: Profile, skip: int = -1) -> int:
        m = 0
        for j, aj in enumerate(a):
            if j != skip:
                m |= self.masks[j][aj]
        return m

    def _global_payoff(self, a: Profile) -> int:
        cached = self._payoff_cache.get(a)
        if cached is None:
            cost = sum(self.costs[j][aj] for j, aj in enumerate(a))
            cached = self._union_mask(a).bit_count() - cost
            self._payoff_cache[a] = cached
        return cached

    def _utility(self, i: int, a: Profile) -> int:
        if a[i] == 0:
            return 0
        others = self._union_mask(a, skip=i)
        gain = (others | self.masks[i][a[i]]).bit_count() - others.bit_count()
        return gain - self.costs[i][a[i]]


def covered(config: SensorConfig, point: Point, a: Profile) -> bool:
    """True iff some active sensor's closed disk contains the grid point."""
    k, l = point
    if not (0 <= k <= config.d and 0 <= l <= config.d):
        raise ValueError(f"point {point} not on the grid")
    for i, ai in enumerate(a):
        r = config.radii_options[i][ai]
        if r == 0:
            continue
        x, y = config.locations[i]
        if (k - x) ** 2 + (l - y) ** 2 <= r * r:
            return True
    return False


def total_coverage(config: SensorConfig, a: Profile) -> int:
    game = CoverageGame(config)
    return game._union_mask(a).bit_count()


def global_payoff(config: SensorConfig, a: Profile) -> float:
    return CoverageGame(config)._global_payoff(a)


def marginal_utility(config: SensorConfig, i: int, a: Profile) -> float:
    return CoverageGame(config)._utility(i, a)


def build_coverage_game(
    d: int,
    n: int,
    radii: Sequence[float],
    alpha: float,
    seed: Optional[int] = None,
    locations: Optional[Sequence[tuple[float, float]]] = None,
    r_c: float = 0.0,
) -> CoverageGame:
    """Deterministic coverage game from explicit locations or a seeded draw.

    Random locations are uniform over [0,d]^2 drawn x-then-y per sensor in
    ascending sensor order, so a seed pins the deployment exactly.
    """
    if locations is None:
        if seed is None:
            raise ValueError("either locations or a seed is required")
        rng = np.random.default_rng(seed)
        locations = [(rng.uniform(0, d), rng.uniform(0, d)) for _ in range(n)]
    elif len(locations) != n:
        raise ValueError(f"{len(locations)} locations given for {n} sensors")
    action_list = tuple([0.0, *sorted(float(r) for r in radii if r != 0)])
    config = SensorConfig(
        d=d,
        locations=tuple((float(x), float(y)) for x, y in locations),
        radii_options=tuple(action_list for _ in range(n)),
        alpha=alpha,
        r_c=r_c,
    )
    return CoverageGame(config)
