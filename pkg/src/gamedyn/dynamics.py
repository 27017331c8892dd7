"""Log-linear and Metropolis learning kernels over a finite potential game.

A :class:`TransitionModel` holds the exact one-step transition matrix of a
kernel at one temperature together with its per-edge transition costs and
the constant ``gamma`` sandwiching transition probabilities between
``gamma * exp(-V/T)`` and ``exp(-V/T) / gamma``.

Only Hamming-1 transitions are possible; the diagonal absorbs the residual
row mass (the defining formulas only fix off-diagonal entries).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .errors import CapacityError, RejectedGameError
from .games import (
    DEFAULT_PROFILE_CAP,
    GameDefinition,
    Profile,
    find_equal_potential_edge,
)

LLL = "lll"
ML = "ml"
KERNELS = (LLL, ML)

DEFAULT_MODEL_CAP = 2 ** 15
ZERO_COST_TOL = 1e-9

_M64 = (1 << 64) - 1


def splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _M64
    x = ((x ^ (x >> 30)) * 0xBF58476D1CE4E5B9) & _M64
    x = ((x ^ (x >> 27)) * 0x94D049BB133111EB) & _M64
    return (x ^ (x >> 31)) & _M64


def mix_seed(seed: int, k: int) -> int:
    """Derive the seed for the k-th independent trace of a batch."""
    return (seed ^ splitmix64(k)) & _M64


def lll_step_distribution(game: GameDefinition, i: int, a: Profile, T: float) -> np.ndarray:
    """Log-linear choice probabilities of player i over its action set."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    game.validate_player(i)
    game.validate_profile(a)
    b = list(a)
    u = np.empty(game.action_sizes[i])
    for alpha in range(game.action_sizes[i]):
        b[i] = alpha
        u[alpha] = game.utility(i, tuple(b))
    w = np.exp((u - u.max()) / T)
    return w / w.sum()


def ml_accept_probability(
    game: GameDefinition, i: int, a: Profile, alpha_new: int, T: float
) -> float:
    """Metropolis acceptance of switching player i's action to ``alpha_new``."""
    if T <= 0:
        raise ValueError("temperature must be positive")
    game.validate_player(i)
    game.validate_profile(a)
    if not 0 <= alpha_new < game.action_sizes[i]:
        raise ValueError(f"action {alpha_new} not in player {i}'s action set")
    b = list(a)
    b[i] = alpha_new
    gap = game.utility(i, a) - game.utility(i, tuple(b))
    return min(1.0, math.exp(-max(gap, 0.0) / T))


@dataclass
class TransitionModel:
    """Exact perturbed chain of one kernel at one temperature."""

    game: GameDefinition
    kernel: str
    T: float
    P: sp.csr_matrix
    gamma: float
    z_max: Optional[float]
    edge_src: np.ndarray
    edge_dst: np.ndarray
    edge_player: np.ndarray
    edge_cost: np.ndarray
    edge_prob: np.ndarray
    _edge_index: dict = field(repr=False, default_factory=dict)

    def __post_init__(self):
        if not self._edge_index:
            self._edge_index = {
                (int(s), int(t)): k
                for k, (s, t) in enumerate(zip(self.edge_src, self.edge_dst))
            }

    @property
    def size(self) -> int:
        return self.game.num_profiles

    def probability(self, a: Profile, b: Profile) -> float:
        return float(self.P[self.game.profile_index(a), self.game.profile_index(b)])

    def cost(self, a: Profile, b: Profile) -> float:
        return self.cost_by_index(self.game.profile_index(a), self.game.profile_index(b))

    def cost_by_index(self, s: int, t: int) -> float:
        if s == t:
            raise ValueError("transition cost is defined for distinct profiles only")
        k = self._edge_index.get((s, t))
        return math.inf if k is None else float(self.edge_cost[k])

    def dense(self) -> np.ndarray:
        return self.P.toarray()

    def cost_matrix(self) -> np.ndarray:
        """Dense cost table with +inf on structurally impossible transitions
        and on the (undefined) diagonal."""
        V = np.full((self.size, self.size), np.inf)
        V[self.edge_src, self.edge_dst] = self.edge_cost
        return V


def edge_cost(model: TransitionModel, a: Profile, b: Profile) -> float:
    return model.cost(a, b)


def _player_orbits(game: GameDefinition, i: int) -> np.ndarray:
    """State indices grouped by opponent context for player i: one row per
    context, one column per action of player i."""
    size = game.num_profiles
    stride = 1
    for m in game.action_sizes[:i]:
        stride *= m
    m_i = game.action_sizes[i]
    idx = np.arange(size)
    base = idx[(idx // stride) % m_i == 0]
    return base[:, None] + stride * np.arange(m_i)[None, :]


def _utility_table(game: GameDefinition) -> np.ndarray:
    U = np.empty((game.n, game.num_profiles))
    for s, a in enumerate(game.profiles()):
        for i in range(game.n):
            U[i, s] = game.utility(i, a)
    return U


def compute_gamma(
    game: GameDefinition, kernel: str, T: float, cap: int = DEFAULT_PROFILE_CAP
) -> tuple[float, bool]:
    """The sandwich constant for a kernel; returns (gamma, exact).

    For log-linear learning this is 1/(n * Z_max) with Z_max enumerated
    exactly over players and opponent contexts.  Above the enumeration cap
    the provable bound Z_max <= |A|_max is used instead (exact=False).
    """
    if kernel == ML:
        return 1.0 / (game.n * max(game.action_sizes)), True
    if kernel != LLL:
        raise ValueError(f"unknown kernel {kernel!r}")
    if game.num_profiles > cap:
        return 1.0 / (game.n * max(game.action_sizes)), False
    U = _utility_table(game)
    z_max = 0.0
    for i in range(game.n):
        u = U[i][_player_orbits(game, i)]
        z = np.exp((u - u.max(axis=1, keepdims=True)) / T).sum(axis=1)
        z_max = max(z_max, float(z.max()))
    return 1.0 / (game.n * z_max), True


def build_transition_model(
    game: GameDefinition,
    kernel: str,
    T: float,
    cap: int = DEFAULT_MODEL_CAP,
    potential_tol: float = ZERO_COST_TOL,
) -> TransitionModel:
    """Assemble the full transition matrix, edge costs and gamma.

    Games with equal-potential Hamming-1 neighbors are rejected: the
    downstream path and cycle analysis assumes strictly distinct potentials
    along every feasible edge.
    """
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    if T <= 0:
        raise ValueError("temperature must be positive")
    if game.num_profiles > cap:
        raise CapacityError(
            f"{game.num_profiles} profiles exceed the model cap {cap}"
        )
    bad_edge = find_equal_potential_edge(game, potential_tol)
    if bad_edge is not None:
        raise RejectedGameError(
            f"equal-potential neighbor profiles {bad_edge[0]} and {bad_edge[1]}"
        )

    n = game.n
    size = game.num_profiles
    U = _utility_table(game)

    srcs, dsts, players, costs, probs = [], [], [], [], []
    z_max = 0.0
    for i in range(n):
        m_i = game.action_sizes[i]
        orbits = _player_orbits(game, i)  # (contexts, m_i)
        u = U[i][orbits]
        u_best = u.max(axis=1, keepdims=True)
        if kernel == LLL:
            w = np.exp((u - u_best) / T)
            z = w.sum(axis=1, keepdims=True)
            z_max = max(z_max, float(z.max()))
            p = w / (n * z)  # prob of (player i, action beta) from any orbit state
        for alpha in range(m_i):
            for beta in range(m_i):
                if beta == alpha:
                    continue
                s_idx = orbits[:, alpha]
                t_idx = orbits[:, beta]
                if kernel == LLL:
                    pr = np.broadcast_to(p[:, beta], s_idx.shape)
                    cost = u_best[:, 0] - u[:, beta]
                else:
                    gap = np.maximum(u[:, alpha] - u[:, beta], 0.0)
                    pr = np.exp(-gap / T) / (n * m_i)
                    cost = gap
                srcs.append(s_idx)
                dsts.append(t_idx)
                players.append(np.full(s_idx.shape, i, dtype=np.int64))
                costs.append(np.maximum(cost, 0.0))
                probs.append(pr)

    edge_src = np.concatenate(srcs)
    edge_dst = np.concatenate(dsts)
    edge_player = np.concatenate(players)
    edge_cost_arr = np.concatenate(costs)
    edge_prob = np.concatenate(probs)

    off = sp.coo_matrix((edge_prob, (edge_src, edge_dst)), shape=(size, size)).tocsr()
    row_sums = np.asarray(off.sum(axis=1)).ravel()
    diag = 1.0 - row_sums
    if diag.min() < -1e-12:
        raise AssertionError("off-diagonal mass exceeds 1; kernel formulas broken")
    P = (off + sp.diags(np.maximum(diag, 0.0))).tocsr()

    if kernel == LLL:
        gamma = 1.0 / (n * z_max)
    else:
        gamma = 1.0 / (n * max(game.action_sizes))
        z_max = None

    return TransitionModel(
        game=game,
        kernel=kernel,
        T=T,
        P=P,
        gamma=gamma,
        z_max=z_max,
        edge_src=edge_src,
        edge_dst=edge_dst,
        edge_player=edge_player,
        edge_cost=edge_cost_arr,
        edge_prob=edge_prob,
    )


@dataclass
class RegularityReport:
    """Outcome of the sandwich / reversibility / dominance checks."""

    kernel: str
    T: float
    sandwich_ok: bool
    weak_reversibility_ok: bool
    cost_dominance_ok: bool
    zero_cost_inclusion_ok: bool
    gamma_ok: bool
    gamma_lll: float
    gamma_ml: float
    witnesses: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return (
            self.sandwich_ok
            and self.weak_reversibility_ok
            and self.cost_dominance_ok
            and self.zero_cost_inclusion_ok
            and self.gamma_ok
        )

    def as_dict(self) -> dict:
        return {
            "kernel": self.kernel,
            "T": self.T,
            "sandwich_ok": self.sandwich_ok,
            "weak_reversibility_ok": self.weak_reversibility_ok,
            "cost_dominance_ok": self.cost_dominance_ok,
            "zero_cost_inclusion_ok": self.zero_cost_inclusion_ok,
            "gamma_ok": self.gamma_ok,
            "gamma_lll": self.gamma_lll,
            "gamma_ml": self.gamma_ml,
            "passed": self.passed,
            "witnesses": [str(w) for w in self.witnesses],
        }


def verify_regularity(
    model: TransitionModel,
    counterpart: Optional[TransitionModel] = None,
    rev_tol: float = 1e-9,
    zero_tol: float = ZERO_COST_TOL,
) -> RegularityReport:
    """Check the gamma sandwich, weak reversibility against the potential,
    and the cross-kernel cost/gamma dominance relations."""
    if counterpart is None:
        other_kernel = ML if model.kernel == LLL else LLL
        counterpart = build_transition_model(model.game, other_kernel, model.T)
    lll = model if model.kernel == LLL else counterpart
    ml = counterpart if model.kernel == LLL else model

    witnesses: list = []

    def sandwich(m: TransitionModel) -> bool:
        ok = True
        bound = np.exp(-m.edge_cost / m.T)
        lo = m.gamma * bound - 1e-12
        hi = bound / m.gamma + 1e-12
        bad = (m.edge_prob < lo) | (m.edge_prob > hi)
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            witnesses.append(
                ("sandwich", m.kernel, int(m.edge_src[k]), int(m.edge_dst[k]))
            )
            ok = False
        return ok

    sandwich_ok = sandwich(model) and sandwich(counterpart)

    game = model.game
    if game.potential is None:
        raise ValueError("weak reversibility check needs a potential oracle")
    phi = np.array([game.potential(a) for a in game.profiles()])

    def weak_rev(m: TransitionModel) -> bool:
        lhs = phi[m.edge_src] - m.edge_cost
        rev = {
            (int(t), int(s)): c
            for s, t, c in zip(m.edge_src, m.edge_dst, m.edge_cost)
        }
        rhs = phi[m.edge_dst] - np.array(
            [rev[(int(s), int(t))] for s, t in zip(m.edge_src, m.edge_dst)]
        )
        bad = np.abs(lhs - rhs) > rev_tol
        if bad.any():
            k = int(np.flatnonzero(bad)[0])
            witnesses.append(
                ("weak_reversibility", m.kernel, int(m.edge_src[k]), int(m.edge_dst[k]))
            )
            return False
        return True

    weak_rev_ok = weak_rev(model) and weak_rev(counterpart)

    # both kernels share the Hamming-1 edge set, but edge order may differ
    ml_cost = {
        (int(s), int(t)): c for s, t, c in zip(ml.edge_src, ml.edge_dst, ml.edge_cost)
    }
    lll_aligned = lll.edge_cost
    ml_aligned = np.array(
        [ml_cost[(int(s), int(t))] for s, t in zip(lll.edge_src, lll.edge_dst)]
    )
    dominance_bad = lll_aligned < ml_aligned - 1e-12
    cost_dom_ok = not dominance_bad.any()
    if not cost_dom_ok:
        k = int(np.flatnonzero(dominance_bad)[0])
        witnesses.append(("cost_dominance", int(lll.edge_src[k]), int(lll.edge_dst[k])))

    inclusion_bad = (lll_aligned <= zero_tol) & (ml_aligned > zero_tol)
    inclusion_ok = not inclusion_bad.any()
    if not inclusion_ok:
        k = int(np.flatnonzero(inclusion_bad)[0])
        witnesses.append(("zero_cost_inclusion", int(lll.edge_src[k]), int(lll.edge_dst[k])))

    gamma_ok = lll.gamma >= ml.gamma - 1e-15
    if not gamma_ok:
        witnesses.append(("gamma", lll.gamma, ml.gamma))

    return RegularityReport(
        kernel=model.kernel,
        T=model.T,
        sandwich_ok=sandwich_ok,
        weak_reversibility_ok=weak_rev_ok,
        cost_dominance_ok=cost_dom_ok,
        zero_cost_inclusion_ok=inclusion_ok,
        gamma_ok=gamma_ok,
        gamma_lll=lll.gamma,
        gamma_ml=ml.gamma,
        witnesses=witnesses,
    )


@dataclass
class StepRecord:
    player: int
    proposed_action: int
    accepted: bool


@dataclass
class Trace:
    """A simulated sample path, reproducible from its seed."""

    seed: int
    kernel: str
    T: float
    initial: Profile
    states: list[int]
    steps: list[StepRecord]

    def to_csv(self, game: GameDefinition, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["step", "state_index", "player", "proposed_action", "accepted", "potential"]
            )
            for t, s in enumerate(self.states):
                pot = (
                    game.potential(game.index_to_profile(s))
                    if game.potential is not None
                    else ""
                )
                if t == 0:
                    writer.writerow([0, s, "", "", "", pot])
                else:
                    rec = self.steps[t - 1]
                    writer.writerow(
                        [t, s, rec.player, rec.proposed_action, int(rec.accepted), pot]
                    )


def _step(game, kernel, T, a: list[int], rng) -> tuple[StepRecord, bool]:
    """One kernel update in place.  Draw order is fixed: player, then action,
    then (ML only) the accept coin."""
    i = int(rng.integers(game.n))
    m_i = game.action_sizes[i]
    if kernel == LLL:
        p = lll_step_distribution(game, i, tuple(a), T)
        alpha_new = int(np.searchsorted(np.cumsum(p), rng.random(), side="right"))
        alpha_new = min(alpha_new, m_i - 1)
        accepted = True
    else:
        alpha_new = int(rng.integers(m_i))
        accept_p = ml_accept_probability(game, i, tuple(a), alpha_new, T)
        accepted = rng.random() < accept_p
    changed = accepted and alpha_new != a[i]
    if accepted:
        a[i] = alpha_new
    return StepRecord(i, alpha_new, accepted), changed


def simulate_path(
    game: GameDefinition,
    kernel: str,
    T: float,
    a0: Profile,
    steps: int,
    seed: int,
) -> Trace:
    """Exact sampling of a kernel without materializing the chain."""
    if kernel not in KERNELS:
        raise ValueError(f"unknown kernel {kernel!r}")
    if T <= 0:
        raise ValueError("temperature must be positive")
    if steps < 0:
        raise ValueError("steps must be nonnegative")
    game.validate_profile(a0)
    rng = np.random.default_rng(seed)
    a = list(a0)
    states = [game.profile_index(a0)]
    records = []
    for _ in range(steps):
        rec, _ = _step(game, kernel, T, a, rng)
        records.append(rec)
        states.append(game.profile_index(tuple(a)))
    return Trace(seed=seed, kernel=kernel, T=T, initial=a0, states=states, steps=records)


def simulate(model: TransitionModel, a0: Profile, steps: int, seed: int) -> Trace:
    return simulate_path(model.game, model.kernel, model.T, a0, steps, seed)


def first_nash_time(
    game: GameDefinition,
    kernel: str,
    T: float,
    a0: Profile,
    seed: int,
    max_steps: int = 10 ** 6,
    nash_cache: Optional[dict] = None,
) -> Optional[int]:
    """Steps until the path first visits a Nash profile; None if capped out."""
    from .games import is_nash

    if nash_cache is None:
        nash_cache = {}
    rng = np.random.default_rng(seed)
    a = list(a0)

    def check(profile: Profile) -> bool:
        hit = nash_cache.get(profile)
        if hit is None:
            hit = is_nash(game, profile)
            nash_cache[profile] = hit
        return hit

    if check(tuple(a)):
        return 0
    for t in range(1, max_steps + 1):
        _, changed = _step(game, kernel, T, a, rng)
        if changed and check(tuple(a)):
            return t
    return None
