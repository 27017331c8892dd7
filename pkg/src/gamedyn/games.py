"""Finite strategic games on enumerable joint-action spaces.

Joint action profiles are plain tuples of action indices, one per player.
Profiles are totally ordered by mixed-radix encoding with player 0 least
significant, which gives every profile a canonical integer index; dense
arrays over the state space use this index throughout the package.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Iterator, Optional

from .errors import CapacityError

Profile = tuple[int, ...]

DEFAULT_PROFILE_CAP = 2 ** 20
DEFAULT_TIE_TOL = 1e-9


@dataclass(frozen=True)
class GameDefinition:
    """A finite game given by per-player action counts and a utility oracle.

    ``utility(i, a)`` returns player i's payoff at profile ``a``.  The
    optional ``potential(a)`` oracle is trusted by construction; use
    :func:`verify_potential` to check it exhaustively.
    """

    action_sizes: tuple[int, ...]
    utility: Callable[[int, Profile], float]
    potential: Optional[Callable[[Profile], float]] = None
    tie_tol: float = DEFAULT_TIE_TOL

    def __post_init__(self):
        if len(self.action_sizes) < 1:
            raise ValueError("game needs at least one player")
        if any(m < 1 for m in self.action_sizes):
            raise ValueError("every action set needs at least one action")

    @property
    def n(self) -> int:
        return len(self.action_sizes)

    @property
    def num_profiles(self) -> int:
        size = 1
        for m in self.action_sizes:
            size *= m
        return size

    def validate_profile(self, a: Profile) -> None:
        if len(a) != self.n:
            raise ValueError(f"profile length {len(a)} != player count {self.n}")
        for i, (ai, mi) in enumerate(zip(a, self.action_sizes)):
            if not 0 <= ai < mi:
                raise ValueError(f"action {ai} of player {i} not in 0..{mi - 1}")

    def validate_player(self, i: int) -> None:
        if not 0 <= i < self.n:
            raise ValueError(f"player index {i} not in 0..{self.n - 1}")

    def profile_index(self, a: Profile) -> int:
        """Mixed-radix encoding; player 0 is the least significant digit."""
        idx = 0
        for ai, mi in zip(reversed(a), reversed(self.action_sizes)):
            idx = idx * mi + ai
        return idx

    def index_to_profile(self, idx: int) -> Profile:
        out = []
        for mi in self.action_sizes:
            out.append(idx % mi)
            idx //= mi
        return tuple(out)

    def profiles(self) -> Iterator[Profile]:
        """All profiles in canonical index order."""
        for idx in range(self.num_profiles):
            yield self.index_to_profile(idx)

    def check_cap(self, cap: int = DEFAULT_PROFILE_CAP) -> None:
        if self.num_profiles > cap:
            raise CapacityError(
                f"joint action space has {self.num_profiles} profiles, cap is {cap}"
            )


def hamming(a: Profile, b: Profile) -> int:
    return sum(1 for x, y in zip(a, b) if x != y)


def utility(game: GameDefinition, i: int, a: Profile) -> float:
    game.validate_player(i)
    game.validate_profile(a)
    return game.utility(i, a)


def best_response_set(game: GameDefinition, i: int, a: Profile) -> set[int]:
    """Actions of player i maximizing its utility against ``a_{-i}``.

    Argmax ties are resolved with ``game.tie_tol`` since utilities are
    real-valued; the default is safe for integer-derived payoffs.
    """
    game.validate_player(i)
    game.validate_profile(a)
    payoffs = []
    b = list(a)
    for alpha in range(game.action_sizes[i]):
        b[i] = alpha
        payoffs.append(game.utility(i, tuple(b)))
    best = max(payoffs)
    return {alpha for alpha, u in enumerate(payoffs) if u >= best - game.tie_tol}


def is_nash(game: GameDefinition, a: Profile) -> bool:
    return all(a[i] in best_response_set(game, i, a) for i in range(game.n))


def enumerate_nash(game: GameDefinition, cap: int = DEFAULT_PROFILE_CAP) -> frozenset[Profile]:
    """Exact Nash set by exhaustive deviation checks."""
    game.check_cap(cap)
    return frozenset(a for a in game.profiles() if is_nash(game, a))


def verify_potential(
    game: GameDefinition, tol: float = DEFAULT_TIE_TOL
) -> tuple[bool, Optional[tuple[int, Profile, int]]]:
    """Exhaustively check the potential identity on all unilateral deviations.

    Returns ``(True, None)`` or ``(False, (player, profile, alt_action))``
    with the first violating deviation.
    """
    if game.potential is None:
        raise ValueError("game has no potential oracle")
    for a in game.profiles():
        phi_a = game.potential(a)
        b = list(a)
        for i in range(game.n):
            u_a = game.utility(i, a)
            for alt in range(game.action_sizes[i]):
                if alt == a[i]:
                    continue
                b[i] = alt
                bt = tuple(b)
                du = game.utility(i, bt) - u_a
                dphi = game.potential(bt) - phi_a
                if abs(du - dphi) > tol:
                    return False, (i, a, alt)
            b[i] = a[i]
    return True, None


def neighborhood(game: GameDefinition, a: Profile, i: Optional[int] = None) -> set[Profile]:
    """Hamming-1 neighbors of ``a``, or player i's deviation set including ``a``."""
    game.validate_profile(a)
    out: set[Profile] = set()
    b = list(a)
    if i is None:
        for j in range(game.n):
            for alt in range(game.action_sizes[j]):
                if alt != a[j]:
                    b[j] = alt
                    out.add(tuple(b))
            b[j] = a[j]
    else:
        game.validate_player(i)
        for alt in range(game.action_sizes[i]):
            b[i] = alt
            out.add(tuple(b))
    return out


def find_equal_potential_edge(
    game: GameDefinition, tol: float = DEFAULT_TIE_TOL
) -> Optional[tuple[Profile, Profile]]:
    """First Hamming-1 edge whose endpoints have equal potential, if any.

    Works from per-player utility differences, which equal potential
    differences on unilateral deviations, so no potential oracle is needed.
    """
    for a in game.profiles():
        b = list(a)
        for i in range(game.n):
            u_a = game.utility(i, a)
            for alt in range(a[i] + 1, game.action_sizes[i]):
                b[i] = alt
                bt = tuple(b)
                if abs(game.utility(i, bt) - u_a) <= tol:
                    return a, bt
            b[i] = a[i]
    return None


def table_game(
    action_sizes: list[int] | tuple[int, ...],
    utilities: Optional[list[list[float]]] = None,
    potential: Optional[list[float]] = None,
    tie_tol: float = DEFAULT_TIE_TOL,
) -> GameDefinition:
    """Build a game from explicit tables indexed by canonical profile index.

    ``utilities`` has one row per profile index with one entry per player.
    If only ``potential`` is given, the game is identical-interest with
    every player's utility equal to the potential.
    """
    sizes = tuple(int(m) for m in action_sizes)
    probe = GameDefinition(sizes, lambda i, a: 0.0)
    size = probe.num_profiles
    if utilities is None and potential is None:
        raise ValueError("need a utility table or a potential table")
    if potential is not None and len(potential) != size:
        raise ValueError(f"potential table has {len(potential)} rows, expected {size}")
    if utilities is not None and len(utilities) != size:
        raise ValueError(f"utility table has {len(utilities)} rows, expected {size}")

    pot_fn = None
    if potential is not None:
        pot_tab = [float(v) for v in potential]
        pot_fn = lambda a: pot_tab[probe.profile_index(a)]  # noqa: E731

    if utilities is not None:
        u_tab = [[float(v) for v in row] for row in utilities]
        u_fn = lambda i, a: u_tab[probe.profile_index(a)][i]  # noqa: E731
    else:
        u_fn = lambda i, a: pot_fn(a)  # noqa: E731

    return GameDefinition(sizes, u_fn, pot_fn, tie_tol=tie_tol)
