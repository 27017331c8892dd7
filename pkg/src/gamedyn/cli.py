"""Command line experiment runner.

One subcommand per operation plus ``coverage-gen``; every subcommand also
accepts ``--config FILE`` with the same fields, and command line flags
override file values.  All randomness is seed-driven: simulation commands
refuse to run without an explicit ``--seed``.

Exit codes: 0 success, 1 configuration error, 2 capacity or numeric error,
3 a verdict failed under ``--strict``.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .analysis import (
    gibbs,
    hitting_bound,
    hitting_report,
    mplr_condition,
    stationary_solve,
    tv_distance,
    zero_cost_stats,
)
from .coverage import build_coverage_game
from .cycles import (
    compare_hierarchies,
    decompose_model,
    empirical_exit_validation,
    model_altitudes,
    verify_structure,
)
from .dynamics import (
    KERNELS,
    LLL,
    ML,
    build_transition_model,
    simulate_path,
    verify_regularity,
)
from .errors import CapacityError, ConfigError, GamedynError, NumericError
from .fixtures import BUILTINS, as_game, coverage_fixture_dict, game_from_dict
from .games import enumerate_nash
from .reporting import export_dot, hitting_times_csv, json_dumps, write_csv, write_json

SIMULATION_OPS = frozenset({"simulate"})
ALL_OPS = ("simulate", "stationary", "hitting", "zerocost", "cda", "compare", "validate")


@dataclass(frozen=True)
class ExperimentConfig:
    game: dict
    kernels: tuple[str, ...]
    temperatures: tuple[float, ...]
    operations: tuple[str, ...]
    output_dir: str
    seed: Optional[int] = None
    steps: int = 1000
    trials: int = 0
    start: Optional[tuple[int, ...]] = None
    strict: bool = False

    def __post_init__(self):
        if not self.operations:
            raise ConfigError("at least one operation is required")
        for op in self.operations:
            if op not in ALL_OPS:
                raise ConfigError(f"unknown operation {op!r}")
        for k in self.kernels:
            if k not in KERNELS:
                raise ConfigError(f"unknown kernel {k!r}")
        if not self.kernels:
            raise ConfigError("at least one kernel is required")
        if not self.temperatures:
            raise ConfigError("at least one temperature is required")
        if any(t <= 0 for t in self.temperatures):
            raise ConfigError("temperatures must be positive")
        needs_seed = SIMULATION_OPS & set(self.operations) or (
            "validate" in self.operations and self.trials > 0
        )
        if needs_seed and self.seed is None:
            raise ConfigError("--seed is required for simulation operations")

    def canonical(self) -> dict:
        return {
            "game": self.game,
            "kernels": list(self.kernels),
            "temperatures": list(self.temperatures),
            "operations": list(self.operations),
            "seed": self.seed,
            "steps": self.steps,
            "trials": self.trials,
            "start": list(self.start) if self.start is not None else None,
            "strict": self.strict,
        }

    def digest(self) -> str:
        return hashlib.sha256(json_dumps(self.canonical()).encode()).hexdigest()


@dataclass
class RunManifest:
    config_digest: str
    version: str
    artifacts: list[str] = field(default_factory=list)
    elapsed_seconds: float = 0.0
    verdicts: dict = field(default_factory=dict)

    @property
    def all_verdicts_pass(self) -> bool:
        return all(self.verdicts.values())


def _config_from_sources(doc: dict, args: argparse.Namespace, operations: Sequence[str]) -> ExperimentConfig:
    """Merge a config file (if any) with command line flags; flags win."""
    game = doc.get("game")
    if getattr(args, "builtin", None):
        game = {"type": "builtin", "name": args.builtin}
    if getattr(args, "fixture", None):
        try:
            game = json.loads(Path(args.fixture).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read fixture {args.fixture}: {exc}") from exc
    if game is None:
        raise ConfigError("a game is required (--builtin, --fixture, or config file)")

    kernel = getattr(args, "kernel", None) or doc.get("kernels", "both")
    if isinstance(kernel, str):
        kernels = tuple(KERNELS) if kernel == "both" else (kernel,)
    else:
        kernels = tuple(kernel)

    temps = getattr(args, "T", None) or doc.get("temperatures") or [1.0]
    seed = args.seed if getattr(args, "seed", None) is not None else doc.get("seed")
    start = getattr(args, "start", None) or doc.get("start")
    return ExperimentConfig(
        game=game,
        kernels=kernels,
        temperatures=tuple(float(t) for t in temps),
        operations=tuple(operations or doc.get("operations", ())),
        output_dir=str(getattr(args, "out", None) or doc.get("output_dir", ".")),
        seed=seed,
        steps=getattr(args, "steps", None) or doc.get("steps", 1000),
        trials=getattr(args, "trials", None) or doc.get("trials", 0),
        start=tuple(int(x) for x in start) if start is not None else None,
        strict=bool(getattr(args, "strict", False) or doc.get("strict", False)),
    )


def _tname(T: float) -> str:
    return ("%g" % T).replace(".", "p").replace("-", "m")


def run(config: ExperimentConfig) -> RunManifest:
    t0 = time.monotonic()
    out = Path(config.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = RunManifest(config_digest=config.digest(), version=__version__)

    holder = game_from_dict(config.game)
    game = as_game(holder)

    def add(path: Path) -> None:
        manifest.artifacts.append(path.name)

    models: dict[tuple[str, float], object] = {}

    def model(kernel: str, T: float):
        key = (kernel, T)
        if key not in models:
            models[key] = build_transition_model(game, kernel, T)
        return models[key]

    start = config.start if config.start is not None else tuple(0 for _ in game.action_sizes)

    needs_model = [op for op in config.operations if op != "simulate"]

    if "simulate" in config.operations:
        for kernel in config.kernels:
            for T in config.temperatures:
                trace = simulate_path(game, kernel, T, start, config.steps, config.seed)
                path = out / f"trace_{kernel}_T{_tname(T)}.csv"
                trace.to_csv(game, path)
                add(path)

    if "stationary" in config.operations:
        doc = {}
        for kernel in config.kernels:
            for T in config.temperatures:
                m = model(kernel, T)
                pi = stationary_solve(m)
                ref = gibbs(game, T)
                tv = tv_distance(pi.probabilities, ref.probabilities)
                doc[f"{kernel}_T{_tname(T)}"] = {
                    "tv_to_gibbs": tv,
                    "probabilities": pi.probabilities,
                }
                manifest.verdicts[f"stationary_{kernel}_T{_tname(T)}"] = bool(tv <= 1e-8)
        add(write_json(doc, out / "stationary.json"))

    nash = enumerate_nash(game) if needs_model else None

    if "hitting" in config.operations:
        doc = {"mplr": {}, "reports": {}}
        for T in config.temperatures:
            doc["mplr"][_tname(T)] = mplr_condition(game, T).as_dict()
        for kernel in config.kernels:
            for T in config.temperatures:
                m = model(kernel, T)
                rep = hitting_report(m, nash, mc_trials=config.trials, mc_seed=config.seed or 0)
                doc["reports"][f"{kernel}_T{_tname(T)}"] = rep.as_dict()
                path = out / f"hitting_{kernel}_T{_tname(T)}.csv"
                add(hitting_times_csv(game, rep.exact, path, kernel, T))
                manifest.verdicts[f"hitting_bound_{kernel}_T{_tname(T)}"] = bool(
                    rep.exact.max() <= rep.bound + 1e-9
                )
        add(write_json(doc, out / "hitting.json"))

    if "zerocost" in config.operations:
        rows = []
        doc = {}
        for kernel in config.kernels:
            m = model(kernel, config.temperatures[0])
            stats = zero_cost_stats(m, nash)
            bound = hitting_bound(m, nash, stats)
            doc[kernel] = {
                "eta": bound.eta,
                "gamma": bound.gamma,
                "bound": bound.bound,
                "eta_exceeds_state_count": bound.eta_exceeds_state_count,
            }
            for s in range(m.size):
                rows.append([kernel, s, int(stats.sigma[s]), int(stats.xi[s])])
        add(write_csv(out / "zerocost.csv", ["kernel", "state_index", "sigma", "xi"], rows))
        add(write_json(doc, out / "zerocost.json"))

    hierarchies: dict[tuple[str, float], object] = {}

    def hierarchy(kernel: str, T: float):
        key = (kernel, T)
        if key not in hierarchies:
            hierarchies[key] = decompose_model(model(kernel, T))
        return hierarchies[key]

    if "cda" in config.operations or "compare" in config.operations:
        kernels = tuple(KERNELS) if "compare" in config.operations else config.kernels
        for kernel in kernels:
            for T in config.temperatures:
                h = hierarchy(kernel, T)
                path = out / f"cycles_{kernel}_T{_tname(T)}.dot"
                export_dot(h, path, game)
                add(path)

    if "compare" in config.operations:
        doc = {}
        for T in config.temperatures:
            lll_m, ml_m = model(LLL, T), model(ML, T)
            reg = verify_regularity(lll_m, ml_m)
            comparison = compare_hierarchies(
                hierarchy(LLL, T),
                hierarchy(ML, T),
                model_altitudes(lll_m),
                model_altitudes(ml_m),
            )
            doc[_tname(T)] = {
                "regularity": reg.as_dict(),
                "hierarchy_comparison": comparison.as_dict(),
            }
            manifest.verdicts[f"regularity_T{_tname(T)}"] = reg.passed
            manifest.verdicts[f"dominance_T{_tname(T)}"] = comparison.passed
        add(write_json(doc, out / "compare.json"))

    if "validate" in config.operations:
        doc = {}
        for kernel in config.kernels:
            for T in config.temperatures:
                m = model(kernel, T)
                h = hierarchy(kernel, T)
                report = verify_structure(h, model_altitudes(m))
                entry = {"structure": report.as_dict()}
                manifest.verdicts[f"structure_{kernel}_T{_tname(T)}"] = report.passed
                if config.trials > 0 and T == config.temperatures[0]:
                    nontrivial = [
                        node
                        for node in h.nodes.values()
                        if 1 < len(node.members) < m.size
                    ]
                    validations = []
                    for node in sorted(nontrivial, key=lambda nd: min(nd.members)):
                        val = empirical_exit_validation(
                            m,
                            node.members,
                            config.temperatures,
                            config.trials,
                            config.seed,
                            expected_exit_height=node.exit_height,
                        )
                        validations.append(val.as_dict())
                    entry["exit_validation"] = validations
                doc[f"{kernel}_T{_tname(T)}"] = entry
        add(write_json(doc, out / "validate.json"))

    manifest.elapsed_seconds = time.monotonic() - t0
    # timing stays out of the manifest file so identical configs give
    # byte-identical artifacts
    add(
        write_json(
            {
                "config_digest": manifest.config_digest,
                "version": manifest.version,
                "artifacts": sorted(set(manifest.artifacts)),
                "verdicts": manifest.verdicts,
            },
            out / "manifest.json",
        )
    )
    return manifest


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--builtin", choices=sorted(BUILTINS), help="built-in game name")
    p.add_argument("--fixture", help="path to a game fixture JSON file")
    p.add_argument("--kernel", choices=[LLL, ML, "both"], default=None)
    p.add_argument("--T", type=float, action="append", help="temperature (repeatable)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=None, help="output directory")
    p.add_argument("--strict", action="store_true", help="exit 3 on any failed verdict")
    p.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gamedyn",
        description="Learning dynamics on finite potential games: exact chains, "
        "hitting statistics, and cycle decomposition.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for op in ALL_OPS:
        p = sub.add_parser(op)
        _add_common(p)
        if op == "simulate":
            p.add_argument("--steps", type=int, default=None)
            p.add_argument(
                "--start",
                type=lambda s: tuple(int(x) for x in s.split(",")),
                default=None,
                help="comma-separated start profile",
            )

    cg = sub.add_parser("coverage-gen", help="emit a coverage-game fixture")
    cg.add_argument("--d", type=int, required=True)
    cg.add_argument("--n", type=int, required=True)
    cg.add_argument("--alpha", type=float, required=True)
    cg.add_argument("--radii", required=True, help="comma-separated radii incl. 0")
    cg.add_argument("--seed", type=int, required=True)
    cg.add_argument("--out", required=True, help="output fixture path")
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "coverage-gen":
            radii = [float(r) for r in args.radii.split(",")]
            if 0.0 not in radii:
                raise ConfigError("radii must include 0 (the off action)")
            cov = build_coverage_game(
                args.d, args.n, [r for r in radii if r != 0], args.alpha, seed=args.seed
            )
            write_json(coverage_fixture_dict(cov.config), args.out)
            return 0

        doc = {}
        if args.config:
            try:
                doc = json.loads(Path(args.config).read_text())
            except (OSError, json.JSONDecodeError) as exc:
                raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        ops = doc.get("operations") or [args.command]
        config = _config_from_sources(doc, args, tuple(ops))
        manifest = run(config)
        if config.strict and not manifest.all_verdicts_pass:
            failed = sorted(k for k, v in manifest.verdicts.items() if not v)
            print(f"strict mode: failed verdicts: {', '.join(failed)}", file=sys.stderr)
            return 3
        return 0
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 1
    except (CapacityError, NumericError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except GamedynError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
