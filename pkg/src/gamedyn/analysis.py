"""Chain-level analysis: stationary laws, hitting times, zero-cost paths.

The zero-cost graph of a kernel (edges with vanishing transition cost)
drives the first-order statistics: sigma is the shortest and xi the longest
zero-cost path length from a state to the Nash set.  Under the
distinct-potential assumption the zero-cost graph is acyclic and its sinks
are exactly the Nash profiles, so both are finite everywhere.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass
from typing import Iterable, Optional

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg

from .dynamics import (
    LLL,
    ML,
    ZERO_COST_TOL,
    TransitionModel,
    build_transition_model,
    first_nash_time,
    mix_seed,
)
from .errors import NumericError
from .games import GameDefinition, Profile, enumerate_nash

DENSE_SOLVE_CAP = 4096


@dataclass
class StationaryDistribution:
    probabilities: np.ndarray
    T: float
    kernel: str

    def __post_init__(self):
        if abs(self.probabilities.sum() - 1.0) > 1e-12:
            raise NumericError("stationary probabilities do not sum to 1")


def tv_distance(p: np.ndarray, q: np.ndarray) -> float:
    return 0.5 * float(np.abs(p - q).sum())


def gibbs(game: GameDefinition, T: float) -> StationaryDistribution:
    """Closed-form Gibbs law exp(phi/T)/Z, max-shifted for overflow safety."""
    if game.potential is None:
        raise ValueError("Gibbs distribution needs a potential oracle")
    if T <= 0:
        raise ValueError("temperature must be positive")
    phi = np.array([game.potential(a) for a in game.profiles()])
    w = np.exp((phi - phi.max()) / T)
    return StationaryDistribution(w / w.sum(), T, "gibbs")


def stationary_solve(
    model: TransitionModel,
    residual_target: float = 1e-10,
    max_iter: int = 10 ** 6,
) -> StationaryDistribution:
    """Left fixed point of the transition matrix.

    GTH elimination up to DENSE_SOLVE_CAP states; damped power iteration
    above, which is adequate only at moderate temperatures.
    """
    n = model.size
    if n == 1:
        return StationaryDistribution(np.ones(1), model.T, model.kernel)
    if n <= DENSE_SOLVE_CAP:
        # Grassmann-Taksar-Heyman elimination: subtraction-free, so the
        # result keeps componentwise relative accuracy even when the
        # stationary law spans hundreds of orders of magnitude (low T)
        A = model.dense()
        for k in range(n - 1, 0, -1):
            s = A[k, :k].sum()
            if s <= 0:
                raise NumericError("GTH elimination hit a zero pivot")
            A[:k, k] /= s
            A[:k, :k] += np.outer(A[:k, k], A[k, :k])
        pi = np.empty(n)
        pi[0] = 1.0
        for k in range(1, n):
            pi[k] = pi[:k] @ A[:k, k]
    else:
        P = model.P
        pi = np.full(n, 1.0 / n)
        for _ in range(max_iter):
            nxt = 0.5 * pi + 0.5 * (pi @ P)
            if np.abs(nxt - pi).sum() <= residual_target / 2:
                pi = nxt
                break
            pi = nxt
        else:
            raise NumericError("power iteration did not converge")
    pi = np.maximum(pi, 0.0)
    pi /= pi.sum()
    residual = float(np.abs(pi @ model.P - pi).sum())
    if residual > residual_target:
        raise NumericError(f"stationary residual {residual} above target")
    return StationaryDistribution(pi, model.T, model.kernel)


def exact_hitting_times(
    model: TransitionModel,
    target: Iterable[Profile | int],
    residual_target: float = 1e-9,
) -> np.ndarray:
    """Expected first-hitting times of the target set from every state,
    via the first-step linear system."""
    game = model.game
    idx = sorted(
        t if isinstance(t, (int, np.integer)) else game.profile_index(t)
        for t in target
    )
    if not idx:
        raise ValueError("target set must be nonempty")
    n = model.size
    in_target = np.zeros(n, dtype=bool)
    in_target[idx] = True
    rest = np.flatnonzero(~in_target)
    h = np.zeros(n)
    if rest.size:
        P = model.P
        Q = P[rest][:, rest]
        ones = np.ones(rest.size)
        try:
            if rest.size <= DENSE_SOLVE_CAP:
                h_rest = np.linalg.solve(np.eye(rest.size) - Q.toarray(), ones)
            else:
                h_rest = sp.linalg.spsolve(sp.eye(rest.size).tocsc() - Q.tocsc(), ones)
        except Exception as exc:
            raise NumericError(f"hitting-time solve failed: {exc}") from exc
        residual = float(np.abs(h_rest - (ones + Q @ h_rest)).max())
        if residual > residual_target:
            raise NumericError(f"hitting-time residual {residual} above target")
        h[rest] = h_rest
    return h


@dataclass
class ZeroCostGraph:
    """Zero-cost edges of one kernel plus per-state path statistics to M."""

    kernel: str
    edges: list[tuple[int, int]]
    sigma: np.ndarray
    xi: np.ndarray
    nash_indices: frozenset[int]


def zero_cost_stats(
    model: TransitionModel,
    nash: Optional[Iterable[Profile]] = None,
    zero_tol: float = ZERO_COST_TOL,
) -> ZeroCostGraph:
    game = model.game
    if nash is None:
        nash = enumerate_nash(game)
    m_idx = frozenset(game.profile_index(a) for a in nash)
    n = model.size

    zero = model.edge_cost <= zero_tol
    edges = list(zip(model.edge_src[zero].tolist(), model.edge_dst[zero].tolist()))
    out: list[list[int]] = [[] for _ in range(n)]
    indeg = np.zeros(n, dtype=np.int64)
    for s, t in edges:
        out[s].append(t)
        indeg[t] += 1

    for s in range(n):
        if s in m_idx and out[s]:
            raise AssertionError(f"Nash state {s} has an outgoing zero-cost edge")
        if s not in m_idx and not out[s]:
            raise AssertionError(f"non-Nash state {s} has no zero-cost exit")

    # Kahn order doubles as the acyclicity check
    order = []
    queue = deque(s for s in range(n) if indeg[s] == 0)
    indeg_work = indeg.copy()
    while queue:
        s = queue.popleft()
        order.append(s)
        for t in out[s]:
            indeg_work[t] -= 1
            if indeg_work[t] == 0:
                queue.append(t)
    if len(order) != n:
        raise AssertionError("zero-cost graph has a cycle; potentials not distinct?")

    sigma = np.full(n, np.inf)
    xi = np.full(n, np.inf)
    for s in m_idx:
        sigma[s] = 0
        xi[s] = 0
    # all zero-cost paths end in M, so both recursions close over successors
    for s in reversed(order):
        if s in m_idx:
            continue
        sigma[s] = 1 + min(sigma[t] for t in out[s])
        xi[s] = 1 + max(xi[t] for t in out[s])
    if not np.isfinite(sigma).all() or not np.isfinite(xi).all():
        raise AssertionError("some state has no zero-cost path to the Nash set")
    return ZeroCostGraph(model.kernel, edges, sigma, xi, m_idx)


@dataclass
class HittingBound:
    """Closed-form evaluation of the geometric hitting-time bound eta/gamma^eta."""

    bound: float
    eta: int
    gamma: float
    eta_exceeds_state_count: bool


def hitting_bound(
    model: TransitionModel,
    nash: Optional[Iterable[Profile]] = None,
    stats: Optional[ZeroCostGraph] = None,
) -> HittingBound:
    if stats is None:
        stats = zero_cost_stats(model, nash)
    eta = int(stats.sigma.max())
    if eta == 0:
        return HittingBound(0.0, 0, model.gamma, False)
    bound = eta / model.gamma ** eta
    return HittingBound(bound, eta, model.gamma, eta >= model.size)


@dataclass
class MplrVerdict:
    defined: bool
    mplr: float
    min_actions: int
    rhs: float
    holds: bool
    argmax_state: Optional[int]

    def as_dict(self) -> dict:
        return {
            "defined": self.defined,
            "mplr": self.mplr,
            "min_actions": self.min_actions,
            "rhs": self.rhs,
            "holds": self.holds,
            "argmax_state": self.argmax_state,
        }


def mplr_condition(game: GameDefinition, T: float) -> MplrVerdict:
    """Maximum-path-length-ratio sufficient condition for log-linear learning
    to dominate Metropolis learning in expected Nash hitting time."""
    nash = enumerate_nash(game)
    lll = build_transition_model(game, LLL, T)
    ml = build_transition_model(game, ML, T)
    stats_lll = zero_cost_stats(lll, nash)
    stats_ml = zero_cost_stats(ml, nash)
    non_nash = [s for s in range(game.num_profiles) if s not in stats_lll.nash_indices]
    if not non_nash:
        return MplrVerdict(False, math.nan, min(game.action_sizes), math.nan, False, None)
    ratios = [stats_lll.xi[s] / stats_ml.sigma[s] for s in non_nash]
    k = int(np.argmax(ratios))
    mplr = float(ratios[k])
    min_actions = min(game.action_sizes)
    rhs = (1.0 / game.n) * (1.0 / lll.gamma) ** mplr
    return MplrVerdict(True, mplr, min_actions, rhs, min_actions >= rhs, non_nash[k])


@dataclass
class HittingReport:
    """Everything the first-order comparison needs, for one kernel and T."""

    kernel: str
    T: float
    gamma: float
    eta: int
    bound: float
    exact: np.ndarray
    mc_mean: Optional[float] = None
    mc_ci_halfwidth: Optional[float] = None
    mc_start: Optional[int] = None

    def as_dict(self) -> dict:
        out = {
            "kernel": self.kernel,
            "T": self.T,
            "gamma": self.gamma,
            "eta": self.eta,
            "bound": self.bound,
            "max_exact_hitting_time": float(self.exact.max()),
        }
        if self.mc_mean is not None:
            out["mc_mean"] = self.mc_mean
            out["mc_ci_halfwidth"] = self.mc_ci_halfwidth
            out["mc_start"] = self.mc_start
        return out


def hitting_report(
    model: TransitionModel,
    nash: Optional[Iterable[Profile]] = None,
    mc_trials: int = 0,
    mc_seed: int = 0,
) -> HittingReport:
    game = model.game
    if nash is None:
        nash = enumerate_nash(game)
    nash = list(nash)
    stats = zero_cost_stats(model, nash)
    bound = hitting_bound(model, nash, stats)
    exact = exact_hitting_times(model, nash)
    report = HittingReport(
        kernel=model.kernel,
        T=model.T,
        gamma=model.gamma,
        eta=bound.eta,
        bound=bound.bound,
        exact=exact,
    )
    if mc_trials > 0:
        start = int(np.argmax(exact))  # worst-case start state
        a0 = game.index_to_profile(start)
        cache: dict = {}
        samples = []
        for k in range(mc_trials):
            t = first_nash_time(
                game, model.kernel, model.T, a0, mix_seed(mc_seed, k), nash_cache=cache
            )
            samples.append(t if t is not None else np.nan)
        samples = np.array(samples, dtype=float)
        report.mc_mean = float(np.nanmean(samples))
        report.mc_ci_halfwidth = float(
            1.96 * np.nanstd(samples, ddof=1) / math.sqrt(len(samples))
        )
        report.mc_start = start
    return report
