"""Cross-validated comparison of learned and symbolic planning stacks.

For every fold and seed, each learned stack trains on the training split and
then plans every held-out instance under the same node budget. The symbolic
baseline plans the same instances without training. Models and the list of
held-out files are written out so that any single run can be replayed with
the ``plan`` command.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

from .bench import kfold_split
from .features import FeatureLayout, type_counts
from .mdp import MdpConfig
from .model import GroundInstance, load_instance
from .planner import Budgets, PlannerConfig, solve
from .trainer import TrainConfig, train
from .valuefn import ValueModel

# Per-family horizons taken from the reference setup.
FAMILY_DEFAULTS = {
    "majsp": {"delta_rl": 200, "delta_h": 100, "delta_H": 600},
    "kitting": {"delta_rl": 100, "delta_h": 50, "delta_H": 300},
    "matchcellar": {"delta_rl": 150, "delta_h": 75, "delta_H": 450},
}

COMMON_DEFAULTS = {
    "gamma_binary": 0.99,
    "buffer_capacity": 50_000,
    "batch_size": 1000,
    "lr": 1e-4,
    "optimizer": "sgd",
    "updates_per_episode": 1,
    "episodes": 1000,
    "window": 100,
    "w": 0.8,
    "node_budget": 2000,
    "time_budget_ms": None,
    "hidden": [64, 64],
    "heuristic": "hff",
}


def family_config(family: str, overrides: dict | None = None) -> dict:
    """Defaults for ``family`` with ``overrides`` applied (flat or keyed by family)."""
    cfg = dict(COMMON_DEFAULTS)
    cfg.update(FAMILY_DEFAULTS.get(family, FAMILY_DEFAULTS["kitting"]))
    if overrides:
        cfg.update({k: v for k, v in overrides.items() if k not in FAMILY_DEFAULTS})
        cfg.update(overrides.get(family, {}))
    return cfg


@dataclass(frozen=True)
class Stack:
    """A learning technique paired with a planning technique."""

    name: str
    reward: str | None  # None for the symbolic baseline
    bootstrap: str = "constant"
    value_mode: str = "full"
    planner: str = "wastar"

    @property
    def learned(self) -> bool:
        return self.reward is not None


STACKS = {
    "hff": Stack("hff", None),
    "baseline": Stack("baseline", "binary", "constant", "full", "wastar"),
    "full_stack": Stack("full_stack", "counting", "heuristic", "residual", "multiqueue"),
}


def mdp_config_for(stack: Stack, cfg: dict) -> MdpConfig:
    gamma = cfg["gamma_binary"] if stack.reward == "binary" else 1.0
    return MdpConfig(
        reward=stack.reward,
        gamma=gamma,
        delta_rl=int(cfg["delta_rl"]),
        delta_h=float(cfg["delta_h"]),
        bootstrap=stack.bootstrap,
        heuristic=cfg["heuristic"],
    )


def train_config_for(cfg: dict, seed: int) -> TrainConfig:
    return TrainConfig(
        episodes=int(cfg["episodes"]),
        batch_size=int(cfg["batch_size"]),
        lr=float(cfg["lr"]),
        buffer_capacity=int(cfg["buffer_capacity"]),
        optimizer=cfg["optimizer"],
        updates_per_episode=int(cfg["updates_per_episode"]),
        window=int(cfg["window"]),
        seed=seed,
    )


def planner_config_for(stack: Stack, cfg: dict) -> PlannerConfig:
    return PlannerConfig(
        mode=stack.planner,
        heuristic="learned" if stack.learned else cfg["heuristic"],
        w=float(cfg["w"]),
        delta_H=float(cfg["delta_H"]),
        budgets=Budgets(cfg["node_budget"], cfg["time_budget_ms"]),
    )


def train_stack(
    stack: Stack, train_set: Sequence[GroundInstance], layout: FeatureLayout, cfg: dict, seed: int, log_path=None
) -> ValueModel:
    mdp_cfg = mdp_config_for(stack, cfg)
    model = ValueModel.create(layout, stack.value_mode, mdp_cfg, hidden=cfg["hidden"], seed=seed)
    train(train_config_for(cfg, seed), train_set, mdp_cfg, model, log_path=log_path)
    return model


@dataclass
class RunRecord:
    fold: int
    seed: int
    stack: str
    instance: str
    solved: bool
    expansions: int


@dataclass
class EvaluationResult:
    rows: list[RunRecord] = field(default_factory=list)

    def coverage(self) -> dict[tuple[int, int, str], tuple[int, int]]:
        out: dict[tuple[int, int, str], list[int]] = {}
        for r in self.rows:
            acc = out.setdefault((r.fold, r.seed, r.stack), [0, 0])
            acc[0] += int(r.solved)
            acc[1] += 1
        return {k: (v[0], v[1]) for k, v in sorted(out.items())}

    def totals(self) -> dict[str, int]:
        out: dict[str, int] = {}
        for r in self.rows:
            out[r.stack] = out.get(r.stack, 0) + int(r.solved)
        return out

    def table(self) -> str:
        lines = ["fold,seed,stack,solved,total,coverage"]
        for (fold, seed, stack), (solved, total) in self.coverage().items():
            lines.append(f"{fold},{seed},{stack},{solved},{total},{solved / total:.3f}")
        return "\n".join(lines) + "\n"


def _fold_job(args) -> list[RunRecord]:
    fold, seed, train_files, test_files, stacks, cfg, out_dir, bounds = args
    train_set = [load_instance(p) for p in train_files]
    test_set = [load_instance(p) for p in test_files]
    layout = FeatureLayout.for_domain(train_set[0].domain, bounds)
    run_dir = Path(out_dir) / f"fold{fold}_seed{seed}"
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / "test_instances.json").write_text(json.dumps([str(p) for p in test_files], indent=1) + "\n")
    rows = []
    for name in stacks:
        stack = STACKS[name]
        model = None
        if stack.learned:
            model = train_stack(stack, train_set, layout, cfg, seed, log_path=run_dir / f"{name}_curve.csv")
            model.save(run_dir / f"{name}_model.json")
        pcfg = planner_config_for(stack, cfg)
        for path, inst in zip(test_files, test_set):
            result = solve(inst, pcfg, model)
            rows.append(RunRecord(fold, seed, name, Path(path).name, result.solved, result.expansions))
    return rows


def evaluate(
    instance_files: Sequence[str | Path],
    family: str,
    out_dir: str | Path,
    folds: int = 5,
    seeds: Sequence[int] = (0, 1),
    stacks: Sequence[str] = ("hff", "baseline", "full_stack"),
    overrides: dict | None = None,
    workers: int | None = None,
) -> EvaluationResult:
    cfg = family_config(family, overrides)
    files = sorted(str(p) for p in instance_files)
    bounds = type_counts([load_instance(p) for p in files])
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.json").write_text(json.dumps({"family": family, **cfg}, indent=1, sort_keys=True) + "\n")
    jobs = []
    for seed in seeds:
        for fold, (train_files, test_files) in enumerate(kfold_split(files, folds, seed)):
            jobs.append((fold, seed, train_files, test_files, list(stacks), cfg, str(out), bounds))
    workers = workers or int(os.environ.get("TEMPO_RL_THREADS", "1"))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(_fold_job, jobs))
    else:
        chunks = [_fold_job(job) for job in jobs]
    result = EvaluationResult([r for chunk in chunks for r in chunk])
    (out / "coverage.csv").write_text(result.table())
    with (out / "runs.csv").open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["fold", "seed", "stack", "instance", "solved", "expansions"])
        for r in result.rows:
            writer.writerow([r.fold, r.seed, r.stack, r.instance, int(r.solved), r.expansions])
    return result
