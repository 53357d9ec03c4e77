"""Delete-free relaxation heuristics h_add and h_ff over snap events.

Each ground action contributes one relaxed event per time-point, chained by
private token facts so that later points need the earlier ones. Pending agenda
points of the current state become extra relaxed events, and finishing every
pending list is part of the relaxed goal: the state can only be a goal once the
agenda is empty. Every relaxed event costs 1, matching the event count that the
learned value estimates.

Deletes, negative conditions, durative protections and the temporal network are
dropped, so a relaxed-unreachable goal is really unreachable.
"""

from __future__ import annotations

import math
import weakref
from dataclasses import dataclass
from typing import Callable

import numpy as np

from . import kernels
from .model import GroundInstance, TimePoint
from .search import SearchState

INF = math.inf
_COST_INF = 2**60

HeuristicFn = Callable[[SearchState, GroundInstance], float]


def _positive_pre(point: TimePoint) -> list[int]:
    return sorted({a for a, v in point.checks if v} | set(point.cond_starts))


@dataclass
class RelaxedTask:
    n_atoms: int
    n_facts: int  # atoms + static tokens
    pre: list[list[int]]
    add: list[list[int]]
    pre_ptr: np.ndarray
    pre_idx: np.ndarray
    add_ptr: np.ndarray
    add_idx: np.ndarray

    @classmethod
    def build(cls, instance: GroundInstance) -> "RelaxedTask":
        n_atoms = len(instance.atoms)
        next_fact = n_atoms
        pre: list[list[int]] = []
        add: list[list[int]] = []
        for ga in instance.actions:
            prev_token = None
            for k, point in enumerate(ga.points):
                p = _positive_pre(point)
                if prev_token is not None:
                    p.append(prev_token)
                a = list(point.adds)
                if k + 1 < len(ga.points):
                    prev_token = next_fact
                    next_fact += 1
                    a.append(prev_token)
                pre.append(p)
                add.append(a)
        pre_ptr, pre_idx = _csr(pre)
        add_ptr, add_idx = _csr(add)
        return cls(n_atoms, next_fact, pre, add, pre_ptr, pre_idx, add_ptr, add_idx)


def _csr(rows: list[list[int]]) -> tuple[np.ndarray, np.ndarray]:
    ptr = np.zeros(len(rows) + 1, dtype=np.int32)
    ptr[1:] = np.cumsum([len(r) for r in rows])
    idx = np.fromiter((x for r in rows for x in r), dtype=np.int32, count=int(ptr[-1]))
    return ptr, idx


_tasks: "weakref.WeakKeyDictionary[GroundInstance, RelaxedTask]" = weakref.WeakKeyDictionary()


def relaxed_task(instance: GroundInstance) -> RelaxedTask:
    task = _tasks.get(instance)
    if task is None:
        task = _tasks[instance] = RelaxedTask.build(instance)
    return task


def _solve(state: SearchState, instance: GroundInstance):
    """Run the relaxed fixpoint; returns (cost, sup, goal_facts, pre_rows)."""
    task = relaxed_task(instance)
    extra_pre: list[list[int]] = []
    extra_add: list[list[int]] = []
    goal = list(instance.goal_ids)
    fact = task.n_facts
    for lst in state.agenda:
        token = None
        for pending in lst:
            point = instance.actions[pending.action].points[pending.point]
            p = _positive_pre(point)
            if token is not None:
                p.append(token)
            token = fact
            fact += 1
            extra_pre.append(p)
            extra_add.append([*point.adds, token])
        goal.append(token)
    if extra_pre:
        ep, ei = _csr(extra_pre)
        ap, ai = _csr(extra_add)
        pre_ptr = np.concatenate([task.pre_ptr, ep[1:] + task.pre_ptr[-1]])
        pre_idx = np.concatenate([task.pre_idx, ei])
        add_ptr = np.concatenate([task.add_ptr, ap[1:] + task.add_ptr[-1]])
        add_idx = np.concatenate([task.add_idx, ai])
    else:
        pre_ptr, pre_idx, add_ptr, add_idx = task.pre_ptr, task.pre_idx, task.add_ptr, task.add_idx
    cost = np.full(fact, _COST_INF, dtype=np.int64)
    if state.mu:
        cost[np.fromiter(state.mu, dtype=np.int64, count=len(state.mu))] = 0
    sup = np.full(fact, -1, dtype=np.int32)
    kernels.relaxed_fixpoint(pre_ptr, pre_idx, add_ptr, add_idx, cost, sup, _COST_INF)
    return cost, sup, goal, task.pre + extra_pre


def hadd(state: SearchState, instance: GroundInstance) -> float:
    cost, _, goal, _ = _solve(state, instance)
    total = 0
    for g in goal:
        c = int(cost[g])
        if c >= _COST_INF:
            return INF
        total += c
    return total


def hff(state: SearchState, instance: GroundInstance) -> float:
    cost, sup, goal, pre = _solve(state, instance)
    if any(cost[g] >= _COST_INF for g in goal):
        return INF
    chosen: set[int] = set()
    stack = [g for g in goal if cost[g] > 0]
    seen: set[int] = set()
    while stack:
        f = stack.pop()
        if f in seen:
            continue
        seen.add(f)
        e = int(sup[f])
        if e in chosen:
            continue
        chosen.add(e)
        stack.extend(p for p in pre[e] if cost[p] > 0)
    return len(chosen)


HEURISTICS: dict[str, HeuristicFn] = {"hff": hff, "hadd": hadd}


def h_sym(state: SearchState, instance: GroundInstance, kind: str = "hff") -> float:
    try:
        fn = HEURISTICS[kind]
    except KeyError:
        raise ValueError(f"unknown symbolic heuristic {kind!r}") from None
    return fn(state, instance)
