"""Hierarchical cycle decomposition of a cost-labeled perturbed chain.

``decompose`` runs the iterative coarsening: at each level, subtract each
cycle's minimum exit cost from its outgoing costs, merge the closed
strongly connected components of the resulting zero-excess graph, and
recompute inter-cycle costs, until a single cycle covers the state space.

Exit heights come from the algorithm itself; the altitude-based exit
formula is transcribed ambiguously in the literature we follow, so it is
exposed only as a diagnostic (both readings) in :func:`verify_structure`.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .dynamics import TransitionModel, build_transition_model
from .errors import GamedynError

ZERO_TOL = 1e-9


def _check_weak_reversibility(V: np.ndarray, phi: np.ndarray, tol: float) -> None:
    finite = np.isfinite(V)
    if not (finite == finite.T).all():
        raise ValueError("finite-cost edges must come in reciprocal pairs")
    i, j = np.nonzero(finite)
    lhs = phi[i] - V[i, j]
    rhs = phi[j] - V[j, i]
    if np.abs(lhs - rhs).max(initial=0.0) > tol:
        raise ValueError("cost table is not induced by the potential (weak reversibility fails)")


def _strongly_connected_components(adj: list[list[int]]) -> list[list[int]]:
    """Iterative Tarjan; returns components as sorted vertex lists."""
    n = len(adj)
    index = [-1] * n
    low = [0] * n
    on_stack = [False] * n
    stack: list[int] = []
    comps: list[list[int]] = []
    counter = 0
    for root in range(n):
        if index[root] != -1:
            continue
        work = [(root, iter(adj[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack[root] = True
        while work:
            v, it = work[-1]
            advanced = False
            for w in it:
                if index[w] == -1:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack[w] = True
                    work.append((w, iter(adj[w])))
                    advanced = True
                    break
                elif on_stack[w]:
                    low[v] = min(low[v], index[w])
            if advanced:
                continue
            work.pop()
            if work:
                low[work[-1][0]] = min(low[work[-1][0]], low[v])
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack[w] = False
                    comp.append(w)
                    if w == v:
                        break
                comps.append(sorted(comp))
    return comps


@dataclass
class Level:
    """One coarsening level: a partition with its cost tables."""

    partition: list[frozenset[int]]
    V: dict[tuple[int, int], float]
    He: list[float]
    Vstar: dict[tuple[int, int], float] = field(default_factory=dict)
    Hm: Optional[list[float]] = None  # set for levels >= 1


@dataclass
class CycleNode:
    members: frozenset[int]
    order: int
    exit_height: float
    mixing_height: float
    phi: float
    children: list["CycleNode"] = field(default_factory=list)
    parent: Optional["CycleNode"] = None


@dataclass
class CycleHierarchy:
    levels: list[Level]
    nodes: dict[frozenset[int], CycleNode]
    root: CycleNode
    phi: np.ndarray
    kernel: str = ""

    @property
    def n_levels(self) -> int:
        return len(self.levels)

    @property
    def order(self) -> int:
        """Decomposition order: final level index minus one."""
        return len(self.levels) - 2

    def smallest_common_cycle(self, x: int, y: int) -> CycleNode:
        best = self.root
        for node in self.nodes.values():
            if x in node.members and y in node.members and len(node.members) < len(best.members):
                best = node
        return best


def decompose(
    V: np.ndarray,
    phi: Sequence[float],
    zero_tol: float = ZERO_TOL,
    rev_tol: float = 1e-9,
    kernel: str = "",
) -> CycleHierarchy:
    """Full cycle decomposition of an irreducible, weakly reversible cost table.

    ``V`` is a dense (N, N) array of transition costs with +inf marking
    impossible transitions; the diagonal is ignored.
    """
    V = np.asarray(V, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n = V.shape[0]
    if V.shape != (n, n) or phi.shape != (n,):
        raise ValueError("V must be square and phi must match its size")
    V = V.copy()
    np.fill_diagonal(V, np.inf)
    _check_weak_reversibility(V, phi, rev_tol)

    finite_adj = [list(np.flatnonzero(np.isfinite(V[s]))) for s in range(n)]
    if n > 1 and len(_strongly_connected_components(finite_adj)) != 1:
        raise ValueError("cost table is reducible; decomposition undefined")

    partition = [frozenset([s]) for s in range(n)]
    costs: dict[tuple[int, int], float] = {
        (int(s), int(t)): float(V[s, t])
        for s in range(n)
        for t in finite_adj[s]
    }

    levels: list[Level] = []
    guard = 0
    while True:
        k = len(partition)
        out_edges: list[list[tuple[int, float]]] = [[] for _ in range(k)]
        for (i, j), c in costs.items():
            out_edges[i].append((j, c))
        He = []
        for i in range(k):
            if not out_edges[i] and k > 1:
                raise ValueError("reducible cost table encountered during coarsening")
            He.append(min((c for _, c in out_edges[i]), default=math.inf))
        Vstar = {(i, j): c - He[i] for (i, j), c in costs.items()}
        level = Level(partition=list(partition), V=dict(costs), He=He, Vstar=Vstar)
        if k > 1:
            level.Hm = [_hm_of(levels, partition[i], He, i) for i in range(k)]
        levels.append(level)
        if k == 1:
            break

        guard += 1
        if guard > n:
            raise GamedynError("coarsening exceeded the state count; no progress")

        zero_adj: list[list[int]] = [[] for _ in range(k)]
        for (i, j), c in Vstar.items():
            if c <= zero_tol:
                zero_adj[i].append(j)
        comps = _strongly_connected_components(zero_adj)
        comp_of = {}
        for ci, comp in enumerate(comps):
            for v in comp:
                comp_of[v] = ci
        closed = []
        for ci, comp in enumerate(comps):
            inside = set(comp)
            if all(
                j in inside
                for i in comp
                for j in zero_adj[i]
            ):
                closed.append(comp)
        merged_members = set()
        new_sets: list[tuple[frozenset[int], list[int]]] = []  # (members, constituents)
        for comp in closed:
            union = frozenset().union(*(partition[i] for i in comp))
            new_sets.append((union, comp))
            merged_members.update(comp)
        for i in range(k):
            if i not in merged_members:
                new_sets.append((partition[i], [i]))
        new_sets.sort(key=lambda pair: min(pair[0]))
        if len(new_sets) == k:
            raise GamedynError("no closed component found; coarsening stalled")

        new_partition = [members for members, _ in new_sets]
        Hm_next = [
            max(levels[-1].He[i] for i in constituents)
            for _, constituents in new_sets
        ]
        new_costs: dict[tuple[int, int], float] = {}
        for a, (_, consts_a) in enumerate(new_sets):
            for b, (_, consts_b) in enumerate(new_sets):
                if a == b:
                    continue
                best = math.inf
                for i in consts_a:
                    for j in consts_b:
                        c = Vstar.get((i, j))
                        if c is not None and c < best:
                            best = c
                if math.isfinite(best):
                    new_costs[(a, b)] = Hm_next[a] + best
        partition = new_partition
        costs = new_costs

    return _build_hierarchy(levels, phi, kernel)


def _hm_of(prev_levels: list[Level], members: frozenset[int], He: list[float], i: int) -> float:
    # mixing height of a level-k cycle: max exit height of its level-(k-1)
    # constituents; for singletons this is 0 by definition
    if len(members) == 1:
        return 0.0
    prev = prev_levels[-1]
    return max(
        prev.He[j] for j, s in enumerate(prev.partition) if s <= members
    )


def _build_hierarchy(levels: list[Level], phi: np.ndarray, kernel: str) -> CycleHierarchy:
    nodes: dict[frozenset[int], CycleNode] = {}
    for k, level in enumerate(levels):
        is_final = k == len(levels) - 1
        for i, members in enumerate(level.partition):
            he = math.inf if is_final and len(levels) > 1 else level.He[i]
            node = nodes.get(members)
            if node is None:
                node = CycleNode(
                    members=members,
                    order=k,
                    exit_height=he,
                    mixing_height=0.0,
                    phi=float(max(phi[s] for s in members)),
                )
                nodes[members] = node
                if k > 0:
                    prev = levels[k - 1]
                    for child_set in prev.partition:
                        if child_set <= members and child_set != members:
                            child = nodes[child_set]
                            child.parent = node
                            node.children.append(child)
                    node.children.sort(key=lambda c: min(c.members))
                    node.mixing_height = max(c.exit_height for c in node.children)
            elif not is_final and abs(level.He[i] - node.exit_height) > 1e-9:
                # carried-over cycles keep their exit height between levels
                raise GamedynError("carried-over cycle changed exit height")
    root = nodes[levels[-1].partition[0]]
    root.exit_height = math.inf
    return CycleHierarchy(levels=levels, nodes=nodes, root=root, phi=phi, kernel=kernel)


def decompose_model(model: TransitionModel, zero_tol: float = ZERO_TOL) -> CycleHierarchy:
    game = model.game
    if game.potential is None:
        raise ValueError("decomposition needs a potential oracle")
    phi = np.array([game.potential(a) for a in game.profiles()])
    return decompose(model.cost_matrix(), phi, zero_tol=zero_tol, kernel=model.kernel)


def communication_altitude(V: np.ndarray, phi: Sequence[float], x: int, y: int) -> float:
    """Best achievable bottleneck of phi(u) - V(u, v) over paths x -> y."""
    table = altitude_table(V, phi, sources=[x])
    value = table[x, y]
    if not math.isfinite(value):
        raise ValueError(f"states {x} and {y} are not connected by finite-cost paths")
    return value


def altitude_table(
    V: np.ndarray, phi: Sequence[float], sources: Optional[Sequence[int]] = None
) -> np.ndarray:
    """All-pairs (or selected-source) communication altitudes via
    maximum-bottleneck Dijkstra on edge weights phi(u) - V(u, v)."""
    V = np.asarray(V, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n = V.shape[0]
    adj: list[list[tuple[int, float]]] = [[] for _ in range(n)]
    for s in range(n):
        for t in np.flatnonzero(np.isfinite(V[s])):
            if t != s:
                adj[s].append((int(t), phi[s] - V[s, t]))
    out = np.full((n, n), -np.inf)
    for src in sources if sources is not None else range(n):
        best = np.full(n, -np.inf)
        best[src] = np.inf  # empty path; the diagonal stays +inf by convention
        heap = [(-best[src], src)]
        visited = np.zeros(n, dtype=bool)
        while heap:
            _, u = heapq.heappop(heap)
            if visited[u]:
                continue
            visited[u] = True
            for v, w in adj[u]:
                cand = min(best[u], w)
                if cand > best[v]:
                    best[v] = cand
                    heapq.heappush(heap, (-cand, v))
        out[src] = best
        out[src, src] = np.inf
    return out


def cycle_altitude(table: np.ndarray, members: frozenset[int]) -> float:
    """min over ordered pairs of distinct member states."""
    ms = sorted(members)
    if len(ms) < 2:
        raise ValueError("cycle altitude needs at least two member states")
    return float(min(table[x, y] for x in ms for y in ms if x != y))


@dataclass
class AltitudeTable:
    pairwise: np.ndarray

    def of_cycle(self, members: frozenset[int]) -> float:
        return cycle_altitude(self.pairwise, members)


def model_altitudes(model: TransitionModel) -> AltitudeTable:
    game = model.game
    phi = np.array([game.potential(a) for a in game.profiles()])
    return AltitudeTable(altitude_table(model.cost_matrix(), phi))


@dataclass
class StructureReport:
    checked_cycles: int
    violations: list = field(default_factory=list)
    exit_height_forms: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return not self.violations

    def as_dict(self) -> dict:
        return {
            "checked_cycles": self.checked_cycles,
            "passed": self.passed,
            "violations": [str(v) for v in self.violations],
            "exit_height_forms": {
                str(k): v for k, v in sorted(self.exit_height_forms.items())
            },
        }


def verify_structure(
    hierarchy: CycleHierarchy,
    altitudes: AltitudeTable,
    tol: float = 1e-9,
    check_metropolis_mixing: Optional[bool] = None,
) -> StructureReport:
    """Check the altitude identities on every multi-state cycle.

    For each cycle: the cycle altitude equals phi minus mixing height, and
    equals each child's phi minus exit height; pairwise altitudes equal the
    altitude of the smallest cycle containing the pair.  Metropolis
    hierarchies are additionally checked against the closed-form mixing
    height phi(cycle) - min member potential.
    """
    if check_metropolis_mixing is None:
        check_metropolis_mixing = hierarchy.kernel == "ml"
    phi = hierarchy.phi
    report = StructureReport(checked_cycles=0)
    for members, node in sorted(hierarchy.nodes.items(), key=lambda kv: (len(kv[0]), min(kv[0]))):
        if len(members) < 2:
            continue
        report.checked_cycles += 1
        a_c = altitudes.of_cycle(members)
        if abs(a_c - (node.phi - node.mixing_height)) > tol:
            report.violations.append(
                ("phi_minus_Hm", tuple(sorted(members)), a_c, node.phi - node.mixing_height)
            )
        for child in node.children:
            if abs(a_c - (child.phi - child.exit_height)) > tol:
                report.violations.append(
                    (
                        "child_phi_minus_He",
                        tuple(sorted(members)),
                        tuple(sorted(child.members)),
                        a_c,
                        child.phi - child.exit_height,
                    )
                )
        if check_metropolis_mixing:
            hm_closed = node.phi - min(phi[s] for s in members)
            if abs(node.mixing_height - hm_closed) > tol:
                report.violations.append(
                    ("metropolis_mixing_height", tuple(sorted(members)), node.mixing_height, hm_closed)
                )
        if node is not hierarchy.root:
            report.exit_height_forms[tuple(sorted(members))] = _exit_forms(
                hierarchy, altitudes, node, tol
            )

    n = len(phi)
    for x in range(n):
        for y in range(x + 1, n):
            axy = altitudes.pairwise[x, y]
            ayx = altitudes.pairwise[y, x]
            if abs(axy - ayx) > tol:
                report.violations.append(("altitude_symmetry", x, y, axy, ayx))
            pi_xy = hierarchy.smallest_common_cycle(x, y)
            if abs(axy - altitudes.of_cycle(pi_xy.members)) > tol:
                report.violations.append(
                    ("smallest_cycle_altitude", x, y, axy, altitudes.of_cycle(pi_xy.members))
                )
    return report


def _exit_forms(
    hierarchy: CycleHierarchy, altitudes: AltitudeTable, node: CycleNode, tol: float
) -> dict:
    """Diagnostic: the two readings of the altitude-based exit-height formula.

    The transcribed min-max form disagrees with the algorithm on worked
    examples; the peak-state form matches.  Both are reported, with the
    algorithm's value as ground truth.
    """
    phi = hierarchy.phi
    members = sorted(node.members)
    outside = [s for s in range(len(phi)) if s not in node.members]
    if not outside:
        return {}
    min_form = min(
        max(phi[a] - altitudes.pairwise[a, b] for b in outside) for a in members
    )
    peak = max(members, key=lambda s: phi[s])
    max_form = node.phi - max(altitudes.pairwise[peak, b] for b in outside)
    return {
        "algorithm": node.exit_height,
        "min_form": float(min_form),
        "min_form_matches": bool(abs(min_form - node.exit_height) <= tol),
        "peak_form": float(max_form),
        "peak_form_matches": bool(abs(max_form - node.exit_height) <= tol),
    }


@dataclass
class SharedCycleComparison:
    members: tuple[int, ...]
    he_lll: float
    he_ml: float
    hm_lll: float
    hm_ml: float
    he_dominates: bool
    hm_dominates: bool


@dataclass
class HierarchyComparison:
    shared: list[SharedCycleComparison]
    only_lll: list[tuple[int, ...]]
    only_ml: list[tuple[int, ...]]
    altitude_dominance_ok: Optional[bool] = None
    altitude_witness: Optional[tuple] = None

    @property
    def passed(self) -> bool:
        ok = all(c.he_dominates and c.hm_dominates for c in self.shared)
        if self.altitude_dominance_ok is not None:
            ok = ok and self.altitude_dominance_ok
        return ok

    def as_dict(self) -> dict:
        return {
            "shared_cycles": [
                {
                    "members": list(c.members),
                    "He_lll": c.he_lll,
                    "He_ml": c.he_ml,
                    "Hm_lll": c.hm_lll,
                    "Hm_ml": c.hm_ml,
                    "He_dominates": c.he_dominates,
                    "Hm_dominates": c.hm_dominates,
                }
                for c in self.shared
            ],
            "only_lll": [list(m) for m in self.only_lll],
            "only_ml": [list(m) for m in self.only_ml],
            "altitude_dominance_ok": self.altitude_dominance_ok,
            "passed": self.passed,
        }


def compare_hierarchies(
    h_lll: CycleHierarchy,
    h_ml: CycleHierarchy,
    alt_lll: Optional[AltitudeTable] = None,
    alt_ml: Optional[AltitudeTable] = None,
    tol: float = 1e-9,
) -> HierarchyComparison:
    """Exit/mixing-height dominance on member-set-identical cycles, plus
    pairwise altitude dominance when altitude tables are supplied."""
    if len(h_lll.phi) != len(h_ml.phi):
        raise ValueError("hierarchies cover different base spaces")
    sets_lll = set(h_lll.nodes)
    sets_ml = set(h_ml.nodes)
    shared = []
    for members in sorted(sets_lll & sets_ml, key=lambda m: (len(m), min(m))):
        a, b = h_lll.nodes[members], h_ml.nodes[members]
        he_dom = a.exit_height >= b.exit_height - tol or (
            math.isinf(a.exit_height) and math.isinf(b.exit_height)
        )
        hm_dom = a.mixing_height >= b.mixing_height - tol
        shared.append(
            SharedCycleComparison(
                members=tuple(sorted(members)),
                he_lll=a.exit_height,
                he_ml=b.exit_height,
                hm_lll=a.mixing_height,
                hm_ml=b.mixing_height,
                he_dominates=he_dom,
                hm_dominates=hm_dom,
            )
        )
    only_lll = [tuple(sorted(m)) for m in sorted(sets_lll - sets_ml, key=lambda m: (len(m), min(m)))]
    only_ml = [tuple(sorted(m)) for m in sorted(sets_ml - sets_lll, key=lambda m: (len(m), min(m)))]
    comparison = HierarchyComparison(shared=shared, only_lll=only_lll, only_ml=only_ml)
    if alt_lll is not None and alt_ml is not None:
        finite = np.isfinite(alt_ml.pairwise) & np.isfinite(alt_lll.pairwise)
        bad = np.zeros_like(finite)
        bad[finite] = alt_ml.pairwise[finite] - alt_lll.pairwise[finite] < -tol
        comparison.altitude_dominance_ok = not bad.any()
        if bad.any():
            x, y = map(int, np.argwhere(bad)[0])
            comparison.altitude_witness = (x, y, float(alt_ml.pairwise[x, y]), float(alt_lll.pairwise[x, y]))
    return comparison


@dataclass
class ExitValidation:
    members: tuple[int, ...]
    start_state: int
    temperatures: list[float]
    mean_exit_times: list[float]
    visited_all_fractions: list[float]
    slope: float
    intercept: float
    r_squared: float
    expected_exit_height: float
    truncated: bool

    def as_dict(self) -> dict:
        return {
            "members": list(self.members),
            "start_state": self.start_state,
            "temperatures": self.temperatures,
            "mean_exit_times": self.mean_exit_times,
            "visited_all_fractions": self.visited_all_fractions,
            "slope": self.slope,
            "intercept": self.intercept,
            "r_squared": self.r_squared,
            "expected_exit_height": self.expected_exit_height,
            "truncated": self.truncated,
        }


def empirical_exit_validation(
    model: TransitionModel,
    members: frozenset[int],
    T_grid: Sequence[float],
    trials: int,
    seed: int,
    max_jumps: int = 10 ** 6,
    expected_exit_height: float = math.nan,
) -> ExitValidation:
    """Monte-Carlo exit times from a cycle across a temperature grid.

    Sampling uses the embedded jump chain with geometric holding times,
    which is exact in distribution and avoids stepping through the
    exponentially many self-loops at low temperature.  The regression of
    log mean exit time on inverse temperature estimates the exit height.
    """
    game = model.game
    phi = np.array([game.potential(a) for a in game.profiles()])
    member_list = sorted(members)
    start = min(member_list, key=lambda s: phi[s])
    node_members = frozenset(members)

    means: list[float] = []
    fractions: list[float] = []
    truncated = False
    rng = np.random.default_rng(seed)
    for T in T_grid:
        m = build_transition_model(game, model.kernel, T)
        P = m.dense()
        stay = np.clip(P.diagonal(), 0.0, 1.0 - 1e-300)
        jump_targets = []
        jump_probs = []
        for s in range(m.size):
            row = P[s].copy()
            row[s] = 0.0
            total = row.sum()
            targets = np.flatnonzero(row)
            jump_targets.append(targets)
            jump_probs.append(np.cumsum(row[targets] / total))
        exit_times = np.empty(trials)
        visited_all = np.zeros(trials, dtype=bool)
        for k in range(trials):
            s = start
            t = 0.0
            visited = {s}
            for _ in range(max_jumps):
                t += rng.geometric(1.0 - stay[s])
                nxt = int(jump_targets[s][np.searchsorted(jump_probs[s], rng.random())])
                if nxt not in node_members:
                    break
                s = nxt
                visited.add(s)
            else:
                truncated = True
            exit_times[k] = t
            visited_all[k] = visited == node_members
        means.append(float(exit_times.mean()))
        fractions.append(float(visited_all.mean()))

    x = 1.0 / np.asarray(T_grid, dtype=float)
    y = np.log(means)
    slope, intercept = np.polyfit(x, y, 1)
    fit = slope * x + intercept
    ss_res = float(((y - fit) ** 2).sum())
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return ExitValidation(
        members=tuple(member_list),
        start_state=start,
        temperatures=[float(T) for T in T_grid],
        mean_exit_times=means,
        visited_all_fractions=fractions,
        slope=float(slope),
        intercept=float(intercept),
        r_squared=r2,
        expected_exit_height=expected_exit_height,
        truncated=truncated,
    )
