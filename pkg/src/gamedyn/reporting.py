"""Artifact writers: DOT rendering of cycle hierarchies, JSON, CSV.

All writers are deterministic: dict keys are sorted, floats are rendered
with repr, cluster and edge ordering in DOT follows the minimal member
index, and newlines are fixed to "\\n".  Re-running the same export on the
same inputs yields byte-identical files.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence, Union

import numpy as np

from .cycles import CycleHierarchy
from .games import GameDefinition

PathLike = Union[str, Path]


def _fmt(v: float) -> str:
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if abs(v - round(v)) < 1e-9:
        return str(int(round(v)))
    return repr(float(v))


def _state_label(game: Optional[GameDefinition], s: int) -> str:
    if game is None:
        return str(s)
    return "".join(str(x) for x in game.index_to_profile(s))


def export_dot(
    hierarchy: CycleHierarchy,
    path: PathLike,
    game: Optional[GameDefinition] = None,
    name: str = "cycles",
) -> Path:
    """Render the hierarchy as a compound DOT graph.

    Every partition member of every intermediate level becomes a nested
    cluster (the final whole-space level is the graph itself).  Edges carry
    one label per level in the form "cost/excess cost", attached to cluster
    boundaries via lhead/ltail for coarse levels.
    """
    levels = hierarchy.levels
    phi = hierarchy.phi
    final = len(levels) - 1
    lines = [f"digraph {name} {{", "  compound=true;", "  rankdir=LR;"]

    # representative base state of a set: its minimal member
    def rep(members: frozenset[int]) -> int:
        return min(members)

    cluster_id: dict[tuple[int, int], str] = {}
    for k in range(1, final):
        for i, members in enumerate(levels[k].partition):
            cluster_id[(k, i)] = f"cluster_L{k}_{i}"

    def emit_cluster(k: int, i: int, indent: str) -> list[str]:
        level = levels[k]
        members = level.partition[i]
        he = level.He[i]
        hm = level.Hm[i] if level.Hm is not None else 0.0
        phis = max(phi[s] for s in members)
        out = [
            f"{indent}subgraph {cluster_id[(k, i)]} {{",
            f'{indent}  label="L{k} {{{",".join(str(s) for s in sorted(members))}}}: '
            f'H_e={_fmt(he)}, H_m={_fmt(hm)}, phi={_fmt(phis)}";',
        ]
        if k == 1:
            for s in sorted(members):
                out.append(
                    f'{indent}  s{s} [label="{_state_label(game, s)}\\nphi={_fmt(phi[s])}"];'
                )
        else:
            prev = levels[k - 1]
            for j, sub in enumerate(prev.partition):
                if sub <= members:
                    out.extend(emit_cluster(k - 1, j, indent + "  "))
        out.append(f"{indent}}}")
        return out

    if final >= 2:
        top = final - 1
        for i in range(len(levels[top].partition)):
            lines.extend(emit_cluster(top, i, "  "))
    else:
        # degenerate hierarchy: no intermediate levels, plain state nodes
        for s in range(len(phi)):
            lines.append(f'  s{s} [label="{_state_label(game, s)}\\nphi={_fmt(phi[s])}"];')

    for k in range(final):
        level = levels[k]
        for (i, j) in sorted(level.V):
            cost = level.V[(i, j)]
            excess = level.Vstar[(i, j)]
            label = f"{_fmt(cost)}/{_fmt(excess)}"
            src = rep(level.partition[i])
            dst = rep(level.partition[j])
            attrs = [f'label="{label}"']
            if k >= 1:
                attrs.append(f"ltail={cluster_id[(k, i)]}")
                attrs.append(f"lhead={cluster_id[(k, j)]}")
                attrs.append("style=bold")
            lines.append(f"  s{src} -> s{dst} [{', '.join(attrs)}];")
    lines.append("}")
    target = Path(path)
    target.write_text("\n".join(lines) + "\n")
    return target


def _json_default(obj):
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (frozenset, set)):
        return sorted(obj)
    if isinstance(obj, Path):
        return str(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def json_dumps(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n"


def write_json(doc, path: PathLike) -> Path:
    target = Path(path)
    target.write_text(json_dumps(doc))
    return target


def write_csv(path: PathLike, header: Sequence[str], rows: Iterable[Sequence]) -> Path:
    target = Path(path)
    with target.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow(["" if v is None else v for v in row])
    return target


def hitting_times_csv(
    game: GameDefinition, exact: np.ndarray, path: PathLike, kernel: str, T: float
) -> Path:
    rows = []
    for s in range(len(exact)):
        profile = game.index_to_profile(s)
        rows.append([s, "".join(str(x) for x in profile), kernel, repr(float(T)), repr(float(exact[s]))])
    return write_csv(path, ["state_index", "profile", "kernel", "T", "expected_hitting_time"], rows)
