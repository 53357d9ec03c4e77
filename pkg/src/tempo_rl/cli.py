"""Command-line entry point: gen, train, plan, validate, evaluate.

Exit codes: 0 success, 2 usage or input error, 3 unsolved within budget,
4 invalid plan.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .bench import FAMILY_SIZES, generate_family, write_family
from .evaluate import STACKS, evaluate, family_config, train_config_for
from .features import FeatureLayout, ObjectBoundError, instance_map, type_counts
from .mdp import MdpConfig
from .model import ParseError, load_instance
from .planner import Budgets, PlannerConfig, solve, stats_csv
from .search import plan_from_json
from .trainer import train
from .validator import MalformedPlanError, validate
from .valuefn import ModelFileError, ValueModel

EXIT_OK, EXIT_USAGE, EXIT_UNSOLVED, EXIT_INVALID = 0, 2, 3, 4


class UsageError(Exception):
    pass


def _threads() -> int:
    raw = os.environ.get("TEMPO_RL_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"TEMPO_RL_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError(f"TEMPO_RL_THREADS must be a positive integer, got {raw!r}")
    return n


def _read_config(path: str | None) -> dict:
    if path is None:
        return {}
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise UsageError("config must be a JSON object")
    return doc


def _instance_files(specs: list[str]) -> list[Path]:
    files: list[Path] = []
    for spec in specs:
        p = Path(spec)
        if p.is_dir():
            files.extend(sorted(f for f in p.glob("*.json")))
        elif p.is_file():
            files.append(p)
        else:
            raise UsageError(f"no such instance file or directory: {spec}")
    if not files:
        raise UsageError("no instance files given")
    return files


def _overrides(args, cfg: dict, family: str) -> dict:
    """Flat settings: defaults, then config file, then explicit flags."""
    out = family_config(family, cfg)
    for flag, key in [
        ("delta_rl", "delta_rl"),
        ("delta_h", "delta_h"),
        ("delta_H", "delta_H"),
        ("episodes", "episodes"),
        ("w", "w"),
        ("node_budget", "node_budget"),
        ("time_budget_ms", "time_budget_ms"),
        ("heuristic", "heuristic"),
    ]:
        value = getattr(args, flag, None)
        if value is not None:
            out[key] = value
    return out


# ------------------------------------------------------------ subcommands


def cmd_gen(args) -> int:
    sizes = None
    if args.sizes:
        try:
            sizes = [tuple(s) for s in json.loads(args.sizes)]
        except (ValueError, TypeError) as exc:
            raise UsageError(f"--sizes must be a JSON list of lists: {exc}") from exc
    docs = generate_family(args.family, args.count, args.seed, sizes)
    manifest = write_family(docs, args.out, args.family)
    print(f"wrote {len(docs)} instances to {args.out} ({manifest.name})")
    return EXIT_OK


def cmd_train(args) -> int:
    if _threads() > 1:
        print("note: training runs a single rollout worker", file=sys.stderr)
    files = _instance_files(args.instances)
    instances = [load_instance(f) for f in files]
    family = args.family or instances[0].domain.name
    cfg = _overrides(args, _read_config(args.config), family)
    reward = args.reward or cfg.get("reward", "counting")
    mdp_cfg = MdpConfig(
        reward=reward,
        gamma=cfg["gamma_binary"] if reward == "binary" else 1.0,
        delta_rl=int(cfg["delta_rl"]),
        delta_h=float(cfg["delta_h"]),
        bootstrap=args.bootstrap or cfg.get("bootstrap", "heuristic"),
        heuristic=cfg["heuristic"] if cfg["heuristic"] != "learned" else "hff",
    )
    bounds = json.loads(args.type_bounds) if args.type_bounds else type_counts(instances)
    layout = FeatureLayout.for_domain(instances[0].domain, bounds)
    mode = "residual" if args.residual else "full"
    model = ValueModel.create(layout, mode, mdp_cfg, hidden=cfg["hidden"], seed=args.seed)
    tcfg = train_config_for(cfg, args.seed)
    curve = Path(args.curve) if args.curve else Path(args.model).with_suffix(".csv")
    result = train(tcfg, instances, mdp_cfg, model, log_path=curve, checkpoint_dir=args.checkpoint_dir)
    model.save(args.model)
    last = result.curve[-1] if result.curve else None
    frac = f"{last.goal_fraction:.3f}" if last else "n/a"
    print(f"trained {mode}/{reward} for {tcfg.episodes} episodes; rolling goal fraction {frac}")
    print(f"model: {args.model}  curve: {curve}")
    return EXIT_OK


def cmd_plan(args) -> int:
    instance = load_instance(args.instance)
    family = instance.domain.name
    cfg = _overrides(args, _read_config(args.config), family)
    model = ValueModel.load(args.model) if args.model else None
    if model is not None:
        instance_map(model.layout, instance)  # raises when the instance exceeds the bounds
    pcfg = PlannerConfig(
        mode=args.mode,
        heuristic=cfg["heuristic"],
        w=float(cfg["w"]),
        delta_H=float(cfg["delta_H"]),
        budgets=Budgets(cfg["node_budget"], cfg["time_budget_ms"]),
    )
    try:
        result = solve(instance, pcfg, model)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    name = Path(args.instance).name
    row = result.stats_row(name, f"{args.mode}/{cfg['heuristic']}", timing=not args.no_timing)
    if args.stats:
        Path(args.stats).write_text(stats_csv([row]), encoding="utf-8")
    if not result.solved:
        print(f"unsolved ({result.reason}) after {result.expansions} expansions")
        return EXIT_UNSOLVED
    text = result.plan.to_json() + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"solved: {len(result.plan.actions)} actions, {result.expansions} expansions", file=sys.stderr)
    return EXIT_OK


def cmd_validate(args) -> int:
    instance = load_instance(args.instance)
    try:
        plan = plan_from_json(Path(args.plan).read_text(encoding="utf-8"))
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read plan {args.plan}: {exc}") from exc
    try:
        verdict = validate(instance, plan)
    except MalformedPlanError as exc:
        print(f"plan invalid: {exc}")
        return EXIT_INVALID
    print(verdict.to_json() if args.json else verdict.render())
    return EXIT_OK if verdict.valid else EXIT_INVALID


def cmd_evaluate(args) -> int:
    cfg = _read_config(args.config)
    if args.instances:
        files = _instance_files(args.instances)
    else:
        gen_dir = Path(args.out) / "instances"
        docs = generate_family(args.family, args.count, args.seed)
        write_family(docs, gen_dir, args.family)
        files = sorted(gen_dir.glob("*.json"))
    overrides = _overrides(args, cfg, args.family)
    result = evaluate(
        files,
        args.family,
        args.out,
        folds=args.folds,
        seeds=[args.seed + k for k in range(args.runs)],
        stacks=args.stacks,
        overrides=overrides,
        workers=_threads(),
    )
    sys.stdout.write(result.table())
    totals = result.totals()
    print("totals: " + ", ".join(f"{k}={totals.get(k, 0)}" for k in args.stacks))
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="JSON file of settings, optionally keyed by family")
    p.add_argument("--seed", type=int, default=0)


def _add_search(p: argparse.ArgumentParser) -> None:
    p.add_argument("--heuristic", "--h", dest="heuristic", choices=["hff", "hadd", "learned"])
    p.add_argument("--w", type=float)
    p.add_argument("--delta-H", dest="delta_H", type=float)
    p.add_argument("--node-budget", dest="node_budget", type=int)
    p.add_argument("--time-budget-ms", dest="time_budget_ms", type=float)


def _add_learning(p: argparse.ArgumentParser) -> None:
    p.add_argument("--reward", choices=["binary", "counting"])
    p.add_argument("--bootstrap", choices=["constant", "heuristic"])
    p.add_argument("--residual", action="store_true", help="learn a correction of the symbolic heuristic")
    _add_horizons(p)


def _add_horizons(p: argparse.ArgumentParser) -> None:
    p.add_argument("--delta-rl", dest="delta_rl", type=int)
    p.add_argument("--delta-h", dest="delta_h", type=float)
    p.add_argument("--episodes", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tempo-rl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate a benchmark family")
    p.add_argument("--family", required=True, choices=sorted(FAMILY_SIZES))
    p.add_argument("--count", type=int, default=10)
    p.add_argument("--sizes", help="JSON list of generator argument tuples")
    p.add_argument("--out", required=True)
    _add_common(p)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("train", help="learn a value model")
    p.add_argument("--instances", nargs="+", required=True, help="instance files or directories")
    p.add_argument("--model", required=True, help="output model file")
    p.add_argument("--curve", help="output learning-curve CSV")
    p.add_argument("--family", help="settings family; defaults to the domain name")
    p.add_argument("--type-bounds", dest="type_bounds", help="JSON object of per-type object bounds")
    p.add_argument("--checkpoint-dir", dest="checkpoint_dir")
    _add_common(p)
    _add_learning(p)
    _add_search(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("plan", help="solve one instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--model")
    p.add_argument("--mode", choices=["wastar", "gbfs", "multiqueue"], default="wastar")
    p.add_argument("--out", help="plan JSON output (stdout when omitted)")
    p.add_argument("--stats", help="stats CSV output")
    p.add_argument("--no-timing", dest="no_timing", action="store_true", help="leave wall time out of stats")
    _add_common(p)
    _add_search(p)
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("validate", help="check a plan against an instance")
    p.add_argument("--instance", required=True)
    p.add_argument("--plan", required=True)
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("evaluate", help="cross-validated coverage comparison")
    p.add_argument("--family", required=True, choices=sorted(FAMILY_SIZES))
    p.add_argument("--instances", nargs="+", help="instance files or directories (generated when omitted)")
    p.add_argument("--count", type=int, default=20, help="instances to generate")
    p.add_argument("--folds", type=int, default=5)
    p.add_argument("--runs", type=int, default=2, help="seeds per fold, starting at --seed")
    p.add_argument("--stacks", nargs="+", choices=sorted(STACKS), default=["hff", "baseline", "full_stack"])
    p.add_argument("--out", required=True)
    _add_common(p)
    _add_horizons(p)
    _add_search(p)
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (UsageError, ParseError, ModelFileError, ObjectBoundError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
