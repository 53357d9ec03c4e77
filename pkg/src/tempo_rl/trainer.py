"""Value iteration with a replay buffer over sampled episodes.

Each visited non-terminal state is stored together with the outcome of every
applicable event: its reward and either a fixed continuation value (goal, dead
end, truncation bootstrap) or the features of the successor, whose value is
predicted fresh at update time. The regression target is the max over those
outcomes of ``reward + gamma * continuation``.
"""

from __future__ import annotations

import csv
import math
import random
from collections import deque
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from .features import vectorize_many
from .heuristic import h_sym
from .mdp import Mdp, MdpConfig, MdpState, reward, sample_initial, truncation_target
from .mlp import make_optimizer
from .model import GroundInstance
from .search import SearchState, is_goal, successors
from .valuefn import ValueModel, activation_grad, activation_range, activate

GOAL, DEAD, TRUNC, MODEL = "goal", "dead", "trunc", "model"


@dataclass
class Record:
    """A visited state and the outcomes of all its applicable events."""

    x: np.ndarray  # float32 features of the state
    phi: float
    good: bool  # h_sym finite
    rewards: np.ndarray  # one per outcome
    fixed: np.ndarray  # continuation value, NaN where the model is queried
    child_x: np.ndarray  # float32 features of MODEL outcomes, in order
    child_phi: np.ndarray


class ReplayBuffer:
    """Bounded FIFO ring buffer."""

    def __init__(self, capacity: int, audit: MdpConfig | None = None):
        if capacity <= 0:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self.audit = audit
        self._items: list[Record] = []
        self._head = 0

    def __len__(self) -> int:
        return len(self._items)

    def push(self, record: Record) -> None:
        if self.audit is not None:
            _audit_rewards(record, self.audit)
        if len(self._items) < self.capacity:
            self._items.append(record)
        else:
            self._items[self._head] = record
            self._head = (self._head + 1) % self.capacity

    def items(self) -> list[Record]:
        """Contents from oldest to newest."""
        return self._items[self._head :] + self._items[: self._head]

    def sample(self, n: int, rng: np.random.Generator) -> list[Record]:
        idx = rng.integers(0, len(self._items), size=min(n, len(self._items)))
        return [self._items[i] for i in idx]


def _audit_rewards(record: Record, cfg: MdpConfig) -> None:
    if cfg.reward == "binary":
        allowed = {0.0, 1.0, -1.0}
    else:
        allowed = {-1.0, -2.0 * cfg.delta_h}
    bad = [r for r in record.rewards.tolist() if r not in allowed]
    if bad:
        raise AssertionError(f"reward {bad[0]} violates the {cfg.reward} schema")


@dataclass
class TrainConfig:
    episodes: int = 1000
    batch_size: int = 1000
    lr: float = 1e-4
    buffer_capacity: int = 50_000
    eps_start: float = 1.0
    eps_end: float = 0.1
    eps_fraction: float = 0.2
    optimizer: str = "sgd"
    updates_per_episode: int = 1
    window: int = 100
    checkpoint_every: int = 0
    seed: int = 0

    def __post_init__(self):
        if min(self.episodes, self.batch_size, self.buffer_capacity, self.window) <= 0 or self.lr <= 0:
            raise ValueError("training sizes and learning rate must be positive")
        if not (0 <= self.eps_end <= 1 and 0 <= self.eps_start <= 1 and 0 <= self.eps_fraction <= 1):
            raise ValueError("exploration rates must lie in [0, 1]")

    def epsilon(self, episode: int) -> float:
        ramp = self.eps_fraction * self.episodes
        if ramp <= 0 or episode >= ramp:
            return self.eps_end
        return self.eps_start + (self.eps_end - self.eps_start) * episode / ramp


@dataclass
class EpisodeLog:
    episode: int
    steps: int
    outcome: str  # goal | dead | trunc
    ret: float
    goal_fraction: float
    loss: float | None

    def row(self) -> list[str]:
        loss = "" if self.loss is None else f"{self.loss:.6f}"
        return [str(self.episode), str(self.steps), self.outcome, f"{self.ret:.6f}", f"{self.goal_fraction:.6f}", loss]


@dataclass
class TrainResult:
    model: ValueModel
    curve: list[EpisodeLog] = field(default_factory=list)
    buffer: ReplayBuffer | None = None

    def episodes_to_reach(self, fraction: float) -> int | None:
        """First episode (1-based count) whose rolling goal fraction reaches ``fraction``."""
        for log in self.curve:
            if log.goal_fraction >= fraction:
                return log.episode + 1
        return None


# ------------------------------------------------------------------ targets


def bellman_target(rewards: np.ndarray, fixed: np.ndarray, child_values: np.ndarray, gamma: float) -> float:
    """Max over outcomes of ``reward + gamma * continuation``."""
    cont = fixed.copy()
    cont[np.isnan(fixed)] = child_values
    return float(np.max(rewards + gamma * cont))


def batch_targets(model: ValueModel, batch: Sequence[Record]) -> np.ndarray:
    """Bellman targets for a batch, predicting successor values in one pass."""
    rows = [r.child_x for r in batch if len(r.child_x)]
    fixed = np.concatenate([r.fixed for r in batch])
    rewards = np.concatenate([r.rewards for r in batch])
    if rows:
        xs = np.concatenate(rows).astype(float)
        phis = np.concatenate([r.child_phi for r in batch if len(r.child_x)])
        cont = fixed.copy()
        cont[np.isnan(fixed)] = model.combine(model.forward(xs), phis)
    else:
        cont = fixed
    starts = np.cumsum([0] + [len(r.rewards) for r in batch[:-1]])
    return np.maximum.reduceat(rewards + model.gamma * cont, starts)


def regression_targets(model: ValueModel, batch: Sequence[Record], targets: np.ndarray) -> np.ndarray:
    """Targets for the activated output: the value itself, or value minus phi."""
    lo, hi = activation_range(model.mode, model.schema, model.delta_h)
    if model.mode == "residual":
        targets = targets - np.array([r.phi for r in batch])
    return np.clip(targets, lo, hi)


def fit_step(model: ValueModel, optimizer, xs: np.ndarray, goal: np.ndarray) -> float:
    """One gradient step on squared error; returns the loss before the step."""
    raw, acts = model.net.forward(xs)
    y = activate(raw, model.mode, model.schema, model.delta_h)
    err = y - goal
    loss = float(np.mean(err * err))
    grad = 2.0 * err * activation_grad(raw, model.mode, model.schema, model.delta_h) / len(xs)
    optimizer.step(model.net.params, model.net.backward(acts, grad))
    return loss


def batch_loss(model: ValueModel, xs: np.ndarray, goal: np.ndarray) -> float:
    y = model.forward(xs)
    return float(np.mean((y - goal) ** 2))


# ----------------------------------------------------------------- rollouts


@dataclass
class _Outcome:
    child: SearchState
    kind: str
    reward: float
    cont: float | None  # fixed continuation, None for MODEL
    h: float


def _outcomes(mdp: Mdp, state: MdpState) -> list[_Outcome]:
    cfg = mdp.config
    inst = mdp.instance(state)
    out = []
    for _, child in successors(state.search, inst):
        h = mdp.h(child, inst)
        goal = is_goal(child, inst)
        r = reward(cfg, False, goal)
        if goal:
            out.append(_Outcome(child, GOAL, r, 0.0, h))
        elif cfg.prune_dead_ends and math.isinf(h):
            out.append(_Outcome(child, DEAD, r, cfg.dead_reward, h))
        elif child.depth >= cfg.delta_rl:
            out.append(_Outcome(child, TRUNC, r, truncation_target(h, cfg), h))
        else:
            out.append(_Outcome(child, MODEL, r, None, h))
    return out


def behavior_action(
    q_values: Sequence[float], hs: Sequence[float], epsilon: float, rng: random.Random
) -> int:
    """Index of the chosen successor: greedy on ``q`` or heuristic-biased exploration."""
    if not q_values:
        raise ValueError("no applicable events")
    if rng.random() < epsilon:
        weights = [0.0 if math.isinf(h) else 1.0 / (1.0 + h) for h in hs]
        if sum(weights) == 0:
            return rng.randrange(len(hs))
        return rng.choices(range(len(hs)), weights=weights)[0]
    best = max(q_values)
    ties = [k for k, q in enumerate(q_values) if q >= best - 1e-12]
    return ties[0] if len(ties) == 1 else rng.choice(ties)


def exploration_probabilities(hs: Sequence[float]) -> list[float]:
    weights = [0.0 if math.isinf(h) else 1.0 / (1.0 + h) for h in hs]
    total = sum(weights)
    if total == 0:
        return [1.0 / len(hs)] * len(hs)
    return [w / total for w in weights]


def train(
    config: TrainConfig,
    instances: Sequence[GroundInstance],
    mdp_config: MdpConfig,
    model: ValueModel,
    h: Callable[[SearchState, GroundInstance], float] | None = None,
    log_path: str | Path | None = None,
    checkpoint_dir: str | Path | None = None,
) -> TrainResult:
    """Run the episode loop and return the trained model and learning curve."""
    if not instances:
        raise ValueError("empty training set")
    hfn = h or (lambda s, inst: h_sym(s, inst, mdp_config.heuristic))
    mdp = Mdp(instances, mdp_config, hfn)
    rng = random.Random(config.seed)
    np_rng = np.random.default_rng(config.seed)
    optimizer = make_optimizer(config.optimizer, config.lr)
    buffer = ReplayBuffer(config.buffer_capacity, audit=mdp_config)
    layout = model.layout
    gamma = mdp_config.gamma
    recent: deque[int] = deque(maxlen=config.window)
    result = TrainResult(model, buffer=buffer)
    log_fh = writer = None
    if log_path is not None:
        log_fh = open(log_path, "w", newline="", encoding="utf-8")
        writer = csv.writer(log_fh, lineterminator="\n")
        writer.writerow(["episode", "steps", "outcome", "return", "rolling_goal_fraction", "loss"])
    try:
        for episode in range(config.episodes):
            eps = config.epsilon(episode)
            state = sample_initial(mdp.instances, rng)
            inst = mdp.instance(state)
            h_state = hfn(state.search, inst)
            steps, ret, outcome = 0, 0.0, "trunc"
            while True:
                x = vectorize_many(layout, [(state.search, inst)])[0].astype(np.float32)
                phi_s = model.phi(h_state)
                good = not math.isinf(h_state)
                outs = [] if (mdp_config.prune_dead_ends and not good) else _outcomes(mdp, state)
                if not outs:
                    buffer.push(
                        Record(x, phi_s, good, np.array([mdp_config.dead_reward]), np.array([0.0]),
                               np.zeros((0, layout.size), np.float32), np.zeros(0))
                    )
                    ret += mdp_config.dead_reward
                    steps += 1
                    outcome = "dead"
                    break
                model_idx = [k for k, o in enumerate(outs) if o.kind == MODEL]
                child_x = vectorize_many(layout, [(outs[k].child, inst) for k in model_idx])
                child_phi = np.array([model.phi(outs[k].h) for k in model_idx])
                rewards = np.array([o.reward for o in outs])
                fixed = np.array([np.nan if o.cont is None else o.cont for o in outs])
                buffer.push(Record(x, phi_s, good, rewards, fixed, child_x.astype(np.float32), child_phi))
                cont = fixed.copy()
                if model_idx:
                    cont[model_idx] = model.combine(model.forward(child_x), child_phi)
                q = (rewards + gamma * cont).tolist()
                k = behavior_action(q, [o.h for o in outs], eps, rng)
                chosen = outs[k]
                ret += chosen.reward
                steps += 1
                if chosen.kind == GOAL:
                    outcome = "goal"
                    break
                if chosen.kind == TRUNC:
                    outcome = "trunc"
                    break
                state = MdpState(chosen.child, state.problem)
                h_state = chosen.h
            recent.append(1 if outcome == "goal" else 0)
            loss = None
            if len(buffer) >= config.batch_size:
                for _ in range(config.updates_per_episode):
                    batch = buffer.sample(config.batch_size, np_rng)
                    goal_vals = regression_targets(model, batch, batch_targets(model, batch))
                    xs = np.stack([r.x for r in batch]).astype(float)
                    loss = fit_step(model, optimizer, xs, goal_vals)
            # missing history counts as failure, so the fraction is never inflated early
            log = EpisodeLog(episode, steps, outcome, ret, sum(recent) / config.window, loss)
            result.curve.append(log)
            if writer is not None:
                writer.writerow(log.row())
            if checkpoint_dir is not None and config.checkpoint_every and (episode + 1) % config.checkpoint_every == 0:
                Path(checkpoint_dir).mkdir(parents=True, exist_ok=True)
                model.save(Path(checkpoint_dir) / f"checkpoint_{episode + 1:06d}.json")
    finally:
        if log_fh is not None:
            log_fh.close()
    return result
