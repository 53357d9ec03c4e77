"""Tree search over temporal states: weighted A*, GBFS and the two-queue hybrid.

Heuristics are batch functions ``states -> values`` so that learned models can
score all successors of an expansion in one forward pass. States whose
heuristic is infinite are pruned. The search space is a tree, so there is no
duplicate detection.
"""

from __future__ import annotations

import csv
import heapq
import io
import math
import time
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .heuristic import h_sym
from .model import GroundInstance
from .search import Plan, SearchState, extract_plan, initial_state, is_goal, successors

BatchFn = Callable[[Sequence[SearchState]], list[float]]
PairFn = Callable[[Sequence[SearchState]], list[tuple[float, float]]]

STATS_HEADER = ["instance", "mode", "solved", "expansions", "generated", "plan_events", "wall_ms"]


class OpenList:
    """Min-priority queue with FIFO tie-breaking and lazy removal."""

    def __init__(self):
        self._heap: list[tuple[float, int, int]] = []
        self._live: set[int] = set()
        self._seq = 0

    def __len__(self) -> int:
        return len(self._live)

    def __contains__(self, node_id: int) -> bool:
        return node_id in self._live

    def push(self, priority: float, node_id: int) -> None:
        heapq.heappush(self._heap, (priority, self._seq, node_id))
        self._seq += 1
        self._live.add(node_id)

    def remove(self, node_id: int) -> bool:
        """Drop ``node_id``; its heap entry is skipped when it surfaces."""
        if node_id in self._live:
            self._live.discard(node_id)
            return True
        return False

    def pop(self) -> tuple[float, int]:
        while self._heap:
            priority, _, node_id = heapq.heappop(self._heap)
            if node_id in self._live:
                self._live.discard(node_id)
                return priority, node_id
        raise IndexError("pop from empty open list")


@dataclass(frozen=True)
class Budgets:
    nodes: int | None = None  # max expansions
    time_ms: float | None = None


@dataclass
class SearchResult:
    plan: Plan | None
    reason: str  # "solved" | "exhausted" | "budget"
    expansions: int
    generated: int
    peak_open: int
    wall_ms: float
    goal_state: SearchState | None = None
    trace: list[tuple] | None = None

    @property
    def solved(self) -> bool:
        return self.plan is not None

    def stats_row(self, instance: str, mode: str, timing: bool = True) -> list[str]:
        return [
            instance,
            mode,
            str(int(self.solved)),
            str(self.expansions),
            str(self.generated),
            str(len(self.plan) if self.plan is not None else ""),
            f"{self.wall_ms:.1f}" if timing else "",
        ]


def stats_csv(rows: Sequence[list[str]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(STATS_HEADER)
    writer.writerows(rows)
    return buf.getvalue()


def symbolic(instance: GroundInstance, kind: str = "hff") -> BatchFn:
    return lambda states: [h_sym(s, instance, kind) for s in states]


def pair(h: BatchFn, u: BatchFn) -> PairFn:
    return lambda states: list(zip(h(states), u(states)))


class _Clock:
    def __init__(self, budgets: Budgets):
        self.budgets = budgets
        self.start = time.perf_counter()

    def elapsed_ms(self) -> float:
        return (time.perf_counter() - self.start) * 1000.0

    def exceeded(self, expansions: int) -> bool:
        b = self.budgets
        if b.nodes is not None and expansions >= b.nodes:
            return True
        return b.time_ms is not None and self.elapsed_ms() >= b.time_ms


def _finish(instance, clock, goal, expansions, generated, peak, reason, trace=None) -> SearchResult:
    plan = extract_plan(goal, instance) if goal is not None else None
    return SearchResult(plan, reason, expansions, generated, peak, clock.elapsed_ms(), goal, trace)


def _single_queue(instance: GroundInstance, keys: BatchFn, budgets: Budgets) -> SearchResult:
    """Best-first search ordered by ``keys`` (which also sees g via ``state.depth``)."""
    clock = _Clock(budgets)
    root = initial_state(instance)
    if is_goal(root, instance):
        return _finish(instance, clock, root, 0, 1, 1, "solved")
    nodes = [root]
    open_list = OpenList()
    (k0,) = keys([root])
    if not math.isinf(k0):
        open_list.push(k0, 0)
    expansions, generated, peak = 0, 1, len(open_list)
    while len(open_list):
        if clock.exceeded(expansions):
            return _finish(instance, clock, None, expansions, generated, peak, "budget")
        _, nid = open_list.pop()
        state = nodes[nid]
        expansions += 1
        if is_goal(state, instance):
            return _finish(instance, clock, state, expansions, generated, peak, "solved")
        children = [c for _, c in successors(state, instance)]
        generated += len(children)
        for child, k in zip(children, keys(children) if children else []):
            if math.isinf(k):
                continue
            nodes.append(child)
            open_list.push(k, len(nodes) - 1)
        peak = max(peak, len(open_list))
    return _finish(instance, clock, None, expansions, generated, peak, "exhausted")


def wastar(instance: GroundInstance, h: BatchFn, w: float = 0.8, budgets: Budgets = Budgets()) -> SearchResult:
    """Weighted A* with priority ``(1 - w) * g + w * h``; g counts events."""
    if not 0 <= w <= 1:
        raise ValueError("w must lie in [0, 1]")

    def keys(states):
        return [math.inf if math.isinf(hv) else (1 - w) * s.depth + w * hv for s, hv in zip(states, h(states))]

    return _single_queue(instance, keys, budgets)


def gbfs(instance: GroundInstance, u: BatchFn, budgets: Budgets = Budgets()) -> SearchResult:
    """Greedy best-first search on a ranking ``u`` (lower is better)."""
    return _single_queue(instance, u, budgets)


def multiqueue(
    instance: GroundInstance,
    scorer: PairFn,
    w: float = 0.8,
    budgets: Budgets = Budgets(),
    trace: bool = False,
) -> SearchResult:
    """Alternate between a weighted-A* queue on h_sym and a GBFS queue on u.

    ``scorer`` returns ``(h_sym, u)`` per state. The popped state is removed
    from the other queue and every successor is pushed to both, unless its
    h_sym is infinite.
    """
    if not 0 <= w <= 1:
        raise ValueError("w must lie in [0, 1]")
    clock = _Clock(budgets)
    log: list[tuple] | None = [] if trace else None
    root = initial_state(instance)
    if is_goal(root, instance):
        return _finish(instance, clock, root, 0, 1, 1, "solved", log)
    queues = (OpenList(), OpenList())
    nodes: list[SearchState] = []

    def push_all(states):
        for s, (hv, uv) in zip(states, scorer(states)):
            if math.isinf(hv):
                continue
            nodes.append(s)
            nid = len(nodes) - 1
            queues[0].push((1 - w) * s.depth + w * hv, nid)
            queues[1].push(uv, nid)
            if log is not None:
                log.append(("push", 0, nid))
                log.append(("push", 1, nid))

    push_all([root])
    expansions, generated, peak = 0, 1, len(queues[0])
    i = 0
    while len(queues[0]):
        if clock.exceeded(expansions):
            return _finish(instance, clock, None, expansions, generated, peak, "budget", log)
        if not len(queues[1]):
            i = 0
        _, nid = queues[i].pop()
        removed = queues[1 - i].remove(nid)
        if log is not None:
            log.append(("pop", i, nid))
            log.append(("remove", 1 - i, nid, removed))
        i = (i + 1) % 2
        state = nodes[nid]
        expansions += 1
        if is_goal(state, instance):
            return _finish(instance, clock, state, expansions, generated, peak, "solved", log)
        children = [c for _, c in successors(state, instance)]
        generated += len(children)
        if children:
            push_all(children)
        peak = max(peak, len(queues[0]), len(queues[1]))
    return _finish(instance, clock, None, expansions, generated, peak, "exhausted", log)


@dataclass
class PlannerConfig:
    mode: str = "wastar"  # wastar | gbfs | multiqueue
    heuristic: str = "hff"  # hff | hadd | learned
    w: float = 0.8
    delta_H: float = 300.0
    budgets: Budgets = field(default_factory=Budgets)


def solve(instance: GroundInstance, config: PlannerConfig, model=None, trace: bool = False) -> SearchResult:
    """Run the configured search; ``model`` is a value model for learned guidance.

    Symbolic heuristics drive wastar and gbfs directly. Multiqueue and any
    learned heuristic need a model.
    """
    from .valuefn import LearnedGuidance

    if config.mode not in ("wastar", "gbfs", "multiqueue"):
        raise ValueError(f"unknown mode {config.mode!r}")
    if config.heuristic != "learned" and config.mode != "multiqueue":
        h = symbolic(instance, config.heuristic)
        if config.mode == "gbfs":
            return gbfs(instance, h, config.budgets)
        return wastar(instance, h, config.w, config.budgets)
    if model is None:
        raise ValueError(f"mode {config.mode} with heuristic {config.heuristic} needs a model")
    guidance = LearnedGuidance(model, instance, config.delta_H)
    if config.mode == "multiqueue":
        return multiqueue(instance, lambda ss: [(h, u) for h, u, _ in guidance.evaluate(ss)], config.w, config.budgets, trace)
    if config.mode == "gbfs":
        return gbfs(instance, lambda ss: [u for _, u, _ in guidance.evaluate(ss)], config.budgets)
    return wastar(instance, lambda ss: [hn for _, _, hn in guidance.evaluate(ss)], config.w, config.budgets)
