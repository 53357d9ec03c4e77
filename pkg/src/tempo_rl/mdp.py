"""Deterministic MDP over search trees of a set of planning instances.

A state is either ``(SearchState, problem index)`` or the sink ``DEAD``. The
only action from a dead end is ``GIVE_UP``, which leads to ``DEAD`` with the
schema's dead-end reward. Goals and ``DEAD`` are terminal, and an episode is
cut when the depth of the next state reaches ``delta_rl``.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Callable, NamedTuple, Sequence, Union

from .heuristic import h_sym
from .model import GroundInstance
from .search import Event, SearchState, initial_state, is_goal, succ, successors

HFn = Callable[[SearchState, GroundInstance], float]


class _Sink:
    _name: str

    def __init__(self, name: str):
        self._name = name

    def __repr__(self) -> str:
        return self._name


DEAD = _Sink("DEAD")
GIVE_UP = _Sink("GIVE_UP")


class MdpState(NamedTuple):
    search: SearchState
    problem: int


AnyState = Union[MdpState, _Sink]


@dataclass(frozen=True)
class MdpConfig:
    reward: str = "counting"  # "binary" | "counting"
    gamma: float = 1.0
    delta_rl: int = 100
    delta_h: float = 50.0
    bootstrap: str = "heuristic"  # "constant" | "heuristic"
    prune_dead_ends: bool = True
    heuristic: str = "hff"

    def __post_init__(self):
        if self.reward not in ("binary", "counting"):
            raise ValueError(f"unknown reward schema {self.reward!r}")
        if self.bootstrap not in ("constant", "heuristic"):
            raise ValueError(f"unknown bootstrap {self.bootstrap!r}")
        if self.reward == "binary" and not 0 < self.gamma < 1:
            raise ValueError("binary reward needs 0 < gamma < 1")
        if self.reward == "counting" and self.gamma != 1:
            raise ValueError("counting reward needs gamma = 1")
        if self.delta_rl <= 0 or self.delta_h <= 0:
            raise ValueError("delta_rl and delta_h must be positive")

    @classmethod
    def for_schema(cls, reward: str, **kw) -> "MdpConfig":
        kw.setdefault("gamma", 0.99 if reward == "binary" else 1.0)
        return cls(reward=reward, **kw)

    @property
    def dead_reward(self) -> float:
        return -1.0 if self.reward == "binary" else -2 * self.delta_h

    @property
    def step_reward(self) -> float:
        return 0.0 if self.reward == "binary" else -1.0

    @property
    def goal_reward(self) -> float:
        return 1.0 if self.reward == "binary" else -1.0


@dataclass
class Transition:
    state: AnyState
    event: Event | _Sink
    reward: float
    next_state: AnyState
    terminal: bool
    truncated: bool
    target: float | None = None  # bootstrap value of next_state when truncated


def sample_initial(instances: Sequence[GroundInstance], rng: random.Random) -> MdpState:
    if not instances:
        raise ValueError("empty training set")
    k = rng.randrange(len(instances))
    return MdpState(initial_state(instances[k]), k)


def reward_bin(is_dead: bool, reaches_goal: bool) -> float:
    if is_dead:
        return -1.0
    return 1.0 if reaches_goal else 0.0


def reward_cnt(is_dead: bool, delta_h: float) -> float:
    return -2 * delta_h if is_dead else -1.0


def reward(config: MdpConfig, is_dead: bool, reaches_goal: bool) -> float:
    if config.reward == "binary":
        return reward_bin(is_dead, reaches_goal)
    return reward_cnt(is_dead, config.delta_h)


def truncation_target(h: float, config: MdpConfig) -> float:
    """Bootstrap value for the state where an episode is cut, given its h_sym."""
    if config.bootstrap == "constant":
        return 0.0 if config.reward == "binary" else -config.delta_h
    if config.reward == "binary":
        return -1.0 if math.isinf(h) else config.gamma ** (h - 1)
    return -2 * config.delta_h if math.isinf(h) else -h


def phi(h: float, config: MdpConfig) -> float:
    """Fixed symbolic base of the residual decomposition."""
    if config.reward == "binary":
        return -1.0 if math.isinf(h) else config.gamma ** (h - 1)
    return -2 * config.delta_h if math.isinf(h) else -h


class Mdp:
    """The MDP induced by a training set, with a pluggable h_sym."""

    def __init__(self, instances: Sequence[GroundInstance], config: MdpConfig, h: HFn | None = None):
        if not instances:
            raise ValueError("empty training set")
        self.instances = list(instances)
        self.config = config
        self.h: HFn = h or (lambda s, inst: h_sym(s, inst, config.heuristic))

    def instance(self, state: MdpState) -> GroundInstance:
        return self.instances[state.problem]

    def is_goal(self, state: AnyState) -> bool:
        return state is not DEAD and is_goal(state.search, self.instance(state))

    def pruned(self, state: MdpState) -> bool:
        return self.config.prune_dead_ends and math.isinf(self.h(state.search, self.instance(state)))

    def actions(self, state: AnyState) -> list:
        """Applicable MDP actions: events, or ``[GIVE_UP]`` in a dead end."""
        if state is DEAD or self.is_goal(state):
            return []
        if self.pruned(state):
            return [GIVE_UP]
        events = [e for e, _ in successors(state.search, self.instance(state))]
        return events or [GIVE_UP]

    def step(self, state: AnyState, action) -> Transition:
        cfg = self.config
        if state is DEAD or self.is_goal(state):
            raise ValueError("no action applies in a terminal state")
        if action is GIVE_UP:
            if self.actions(state) != [GIVE_UP]:
                raise ValueError("GIVE_UP applies only in dead ends")
            return Transition(state, GIVE_UP, cfg.dead_reward, DEAD, True, False)
        if self.pruned(state):
            raise ValueError("only GIVE_UP applies in a pruned state")
        inst = self.instance(state)
        child = MdpState(succ(state.search, action, inst), state.problem)
        goal = is_goal(child.search, inst)
        r = reward(cfg, False, goal)
        if goal:
            return Transition(state, action, r, child, True, False)
        if child.search.depth >= cfg.delta_rl:
            target = truncation_target(self.h(child.search, inst), cfg)
            return Transition(state, action, r, child, False, True, target)
        return Transition(state, action, r, child, False, False)


def value_iteration(mdp: Mdp, root: MdpState, gamma=None) -> list[tuple[SearchState, object]]:
    """Exact optimal values on the truncated tree below ``root``.

    Returns ``(state, V*)`` for every node that is not cut by truncation, in
    post-order. Arithmetic follows the type of ``gamma``: pass a ``Fraction``
    for exact binary values.
    """
    cfg = mdp.config
    g = cfg.gamma if gamma is None else gamma
    out: list[tuple[SearchState, object]] = []

    def bootstrap(node: MdpState):
        h = mdp.h(node.search, mdp.instance(node))
        if cfg.reward == "binary" and cfg.bootstrap == "heuristic" and not math.isinf(h):
            return g ** (int(h) - 1)
        return truncation_target(h, cfg)

    def solve(state: MdpState):
        if mdp.is_goal(state):
            v = 0
        elif mdp.actions(state) == [GIVE_UP]:
            v = cfg.dead_reward
        else:
            inst = mdp.instance(state)
            best = None
            for _, child in successors(state.search, inst):
                node = MdpState(child, state.problem)
                goal = is_goal(child, inst)
                r = reward(cfg, False, goal)
                if goal:
                    q = r
                elif child.depth >= cfg.delta_rl:
                    q = r + g * bootstrap(node)
                else:
                    q = r + g * solve(node)
                if best is None or q > best:
                    best = q
            v = best
        out.append((state.search, v))
        return v

    solve(root)
    return out
