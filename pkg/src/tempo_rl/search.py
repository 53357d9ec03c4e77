"""Search states, applicable events and successor generation.

A state is the tuple (mu, delta, agenda, stn, omega):

* ``mu``     true atoms (frozenset of atom ids)
* ``delta``  active durative conditions, a sorted tuple used as a multiset
* ``agenda`` pending time-points, one tuple per started action
* ``stn``    temporal network over the last expanded and the pending time-points
* ``omega``  last expanded time-point

Every expanded time-point is placed at least ``epsilon`` after the previous one,
and all pending agenda heads are kept strictly after it. Events are therefore
totally ordered in time, so interfering events can never be scheduled at the
same instant. The only exception is the very first event, which may start at 0.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, NamedTuple, Union

from .model import GroundInstance, rational_json
from .stn import ORIGIN, Stn


@dataclass(frozen=True)
class StartAction:
    action: int


@dataclass(frozen=True)
class ExpandTimePoint:
    slot: int  # index into the agenda
    action: int
    point: int


Event = Union[StartAction, ExpandTimePoint]


class Pending(NamedTuple):
    action: int
    point: int
    tp: int  # STN time-point id


class SearchState:
    __slots__ = ("mu", "delta", "agenda", "stn", "omega", "parent", "event", "depth", "__weakref__")

    def __init__(self, mu, delta, agenda, stn, omega, parent=None, event=None, depth=0):
        self.mu: frozenset[int] = mu
        self.delta: tuple[int, ...] = delta
        self.agenda: tuple[tuple[Pending, ...], ...] = agenda
        self.stn: Stn = stn
        self.omega: int = omega
        self.parent: SearchState | None = parent
        self.event: Event | None = event
        self.depth: int = depth

    def key(self) -> tuple:
        """Structural identity (ignores the parent chain)."""
        return (self.mu, self.delta, self.agenda, self.omega, self.stn.matrix_key())

    def __repr__(self) -> str:
        return f"SearchState(depth={self.depth}, |mu|={len(self.mu)}, agenda={len(self.agenda)})"


def initial_state(instance: GroundInstance) -> SearchState:
    return SearchState(instance.init_ids, (), (), Stn(), ORIGIN)


def is_goal(state: SearchState, instance: GroundInstance) -> bool:
    return not state.agenda and instance.goal_ids <= state.mu


def _apply_point(mu, delta, point):
    """Logical part of expanding one time-point; ``None`` if not applicable."""
    for atom, value in point.checks:
        if (atom in mu) != value:
            return None
    for atom in point.cond_starts:
        if atom not in mu:
            return None
    if point.cond_ends:
        remaining = list(delta)
        for atom in point.cond_ends:
            try:
                remaining.remove(atom)
            except ValueError:
                return None
    else:
        remaining = delta
    if point.dels:
        protected = set(remaining)
        for atom in point.dels:
            if atom in protected:
                return None
        new_mu = (mu - set(point.dels)) | set(point.adds)
    elif point.adds:
        new_mu = mu | set(point.adds)
    else:
        new_mu = mu
    for atom in point.cond_starts:
        if atom not in new_mu:
            return None
    if point.cond_starts:
        new_delta = tuple(sorted((*remaining, *point.cond_starts)))
    else:
        new_delta = tuple(remaining)
    return frozenset(new_mu), new_delta


def _separate(stn: Stn, instance: GroundInstance, omega: int, tp: int, heads) -> bool:
    """Order ``tp`` after ``omega`` and before every pending head."""
    eps = instance.epsilon
    if omega != ORIGIN:
        if not stn.add_constraint(omega, tp, -eps):
            return False
    for h in heads:
        if not stn.add_constraint(tp, h, -eps):
            return False
    return True


def _start(state: SearchState, instance: GroundInstance, a: int) -> SearchState | None:
    ga = instance.actions[a]
    logic = _apply_point(state.mu, state.delta, ga.points[0])
    if logic is None:
        return None
    stn = state.stn.branch_copy()
    tps = [stn.add_time_point() for _ in ga.points]
    t0 = tps[0]
    for k, point in enumerate(ga.points[1:], start=1):
        if point.anchor is None:
            stn.add_bounds(tps[k], t0, ga.dmin, ga.dmax)
        else:
            stn.add_bounds(tps[k], t0, point.anchor, point.anchor)
    if not stn.consistent:
        return None
    if not _separate(stn, instance, state.omega, t0, [lst[0].tp for lst in state.agenda]):
        return None
    pending = tuple(Pending(a, k, tps[k]) for k in range(1, len(tps)))
    stn.retain([t0, *tps[1:], *(p.tp for lst in state.agenda for p in lst)])
    return SearchState(
        logic[0],
        logic[1],
        state.agenda + (pending,),
        stn,
        t0,
        state,
        StartAction(a),
        state.depth + 1,
    )


def _expand(state: SearchState, instance: GroundInstance, slot: int) -> SearchState | None:
    lst = state.agenda[slot]
    head = lst[0]
    point = instance.actions[head.action].points[head.point]
    logic = _apply_point(state.mu, state.delta, point)
    if logic is None:
        return None
    others = [l[0].tp for s, l in enumerate(state.agenda) if s != slot]
    if len(lst) > 1:
        others.append(lst[1].tp)
    stn = state.stn.branch_copy()
    if not _separate(stn, instance, state.omega, head.tp, others):
        return None
    if len(lst) > 1:
        agenda = state.agenda[:slot] + (lst[1:],) + state.agenda[slot + 1 :]
    else:
        agenda = state.agenda[:slot] + state.agenda[slot + 1 :]
    stn.retain([head.tp, *(p.tp for lst in agenda for p in lst)])
    return SearchState(
        logic[0],
        logic[1],
        agenda,
        stn,
        head.tp,
        state,
        ExpandTimePoint(slot, head.action, head.point),
        state.depth + 1,
    )


def successors(state: SearchState, instance: GroundInstance) -> list[tuple[Event, SearchState]]:
    """All (event, child) pairs: starts in grounding order, then agenda heads in order."""
    out = []
    mu = state.mu
    for ga in instance.actions:
        p0 = ga.points[0]
        # cheap precondition filter before building the child
        if any((atom in mu) != v for atom, v in p0.checks) or any(a not in mu for a in p0.cond_starts):
            continue
        child = _start(state, instance, ga.index)
        if child is not None:
            out.append((child.event, child))
    for slot in range(len(state.agenda)):
        child = _expand(state, instance, slot)
        if child is not None:
            out.append((child.event, child))
    return out


def applicable_events(state: SearchState, instance: GroundInstance) -> list[Event]:
    return [e for e, _ in successors(state, instance)]


def succ(state: SearchState, event: Event, instance: GroundInstance) -> SearchState:
    if isinstance(event, StartAction):
        child = _start(state, instance, event.action)
    else:
        lst = state.agenda[event.slot] if event.slot < len(state.agenda) else None
        if lst is None or (lst[0].action, lst[0].point) != (event.action, event.point):
            raise ValueError(f"event {event} does not reference an agenda head")
        child = _expand(state, instance, event.slot)
    if child is None:
        raise ValueError(f"event {event} is not applicable")
    return child


def path(state: SearchState) -> list[SearchState]:
    chain = []
    node: SearchState | None = state
    while node is not None:
        chain.append(node)
        node = node.parent
    chain.reverse()
    return chain


# -------------------------------------------------------------------- plans


class PlanAction(NamedTuple):
    action: str
    start: Fraction
    duration: Fraction


@dataclass(frozen=True)
class Plan:
    events: tuple[tuple[str, Fraction], ...]
    actions: tuple[PlanAction, ...]

    def __len__(self) -> int:
        return len(self.events)

    def to_json(self) -> str:
        return plan_to_json(self.actions)

    def render(self) -> str:
        lines = [f"{float(a.start):10.3f}: {a.action} [{float(a.duration):.3f}]" for a in self.actions]
        return "\n".join(lines)


def event_label(event: Event, instance: GroundInstance) -> str:
    if isinstance(event, StartAction):
        return f"start {instance.actions[event.action].name}"
    ga = instance.actions[event.action]
    which = "end" if ga.points[event.point].anchor is None else f"point {event.point}"
    return f"{which} {ga.name}"


def extract_plan(goal_state: SearchState, instance: GroundInstance) -> Plan:
    assert goal_state.stn.consistent, "goal state with inconsistent temporal network"
    # live networks only keep pending points, so rebuild the complete one
    full = Stn.from_constraints(goal_state.stn.allocated, goal_state.stn.constraints)
    schedule = full.earliest_schedule()
    events = []
    actions = []
    for node in path(goal_state)[1:]:
        t = schedule[node.omega]
        events.append((event_label(node.event, instance), t))
        if isinstance(node.event, StartAction):
            end_tp = node.agenda[-1][-1].tp
            actions.append(PlanAction(instance.actions[node.event.action].name, t, schedule[end_tp] - t))
    return Plan(tuple(events), tuple(actions))


def plan_to_json(actions) -> str:
    return json.dumps(
        [{"action": a.action, "start": rational_json(a.start), "duration": rational_json(a.duration)} for a in actions],
        indent=1,
    )


def plan_from_json(text: str) -> list[PlanAction]:
    raw = json.loads(text)
    if not isinstance(raw, list):
        raise ValueError("plan must be a JSON list")
    out = []
    for i, item in enumerate(raw):
        try:
            out.append(
                PlanAction(str(item["action"]), Fraction(*item["start"]), Fraction(*item["duration"]))
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"malformed plan entry {i}: {item!r}") from exc
    return out


def iter_tree(state: SearchState, instance: GroundInstance, max_depth: int) -> Iterator[SearchState]:
    """Depth-first enumeration of the search tree below ``state``."""
    stack = [state]
    while stack:
        s = stack.pop()
        yield s
        if s.depth - state.depth < max_depth and not is_goal(s, instance):
            stack.extend(child for _, child in reversed(successors(s, instance)))
