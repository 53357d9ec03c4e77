"""Timed plan validation by replaying snap points in time order.

Each plan entry ``(action, start, duration)`` is expanded into its time-points.
Points are processed one at a time in order of (time, plan position, point
index). A single point first checks its instantaneous conditions and the atoms
of durative conditions starting there, releases durative conditions ending
there, applies its deletes then adds, and finally activates the durative
conditions it starts. A delete of an atom protected by an active durative
condition is a violation. The goal must hold once every point has been replayed.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .model import GroundInstance
from .search import PlanAction


class MalformedPlanError(ValueError):
    pass


@dataclass
class Verdict:
    valid: bool
    violations: list[dict] = field(default_factory=list)

    def __bool__(self) -> bool:
        return self.valid

    def to_json(self) -> str:
        return json.dumps(
            {
                "valid": self.valid,
                "violations": [
                    {**v, "time": [v["time"].numerator, v["time"].denominator]} if "time" in v else v
                    for v in self.violations
                ],
            },
            indent=1,
        )

    def render(self) -> str:
        if self.valid:
            return "plan valid"
        v = self.violations[0]
        when = f" at t={v['time']}" if "time" in v else ""
        return f"plan invalid{when}: {v['message']}"


def point_times(instance: GroundInstance, action_index: int, start: Fraction, duration: Fraction) -> list[Fraction]:
    ga = instance.actions[action_index]
    return [start + (duration if p.anchor is None else p.anchor) for p in ga.points]


def validate(instance: GroundInstance, plan: Sequence[PlanAction]) -> Verdict:
    def fail(message, time=None, atom=None):
        v = {"message": message}
        if time is not None:
            v["time"] = time
        if atom is not None:
            v["atom"] = str(instance.atoms[atom])
        return Verdict(False, [v])

    snaps = []
    for pos, entry in enumerate(plan):
        idx = instance.action_index.get(entry.action)
        if idx is None:
            raise MalformedPlanError(f"unknown action {entry.action!r}")
        if entry.start < 0:
            raise MalformedPlanError(f"negative start time for {entry.action}")
        ga = instance.actions[idx]
        if not ga.dmin <= entry.duration <= ga.dmax:
            return fail(f"duration {entry.duration} of {ga.name} outside [{ga.dmin}, {ga.dmax}]", entry.start)
        for k, t in enumerate(point_times(instance, idx, entry.start, entry.duration)):
            snaps.append((t, pos, k, idx))
    snaps.sort(key=lambda s: s[:3])

    mu = set(instance.init_ids)
    active: Counter[int] = Counter()
    for t, pos, k, idx in snaps:
        ga = instance.actions[idx]
        point = ga.points[k]
        for atom, value in point.checks:
            if (atom in mu) != value:
                return fail(f"condition of {ga.name} not satisfied", t, atom)
        for atom in point.cond_starts:
            if atom not in mu:
                return fail(f"durative condition of {ga.name} false at its start", t, atom)
        for atom in point.cond_ends:
            if atom not in mu or active[atom] <= 0:
                return fail(f"durative condition of {ga.name} not maintained", t, atom)
            active[atom] -= 1
        for atom in point.dels:
            if active[atom] > 0:
                return fail(f"{ga.name} deletes an atom protected by a durative condition", t, atom)
            mu.discard(atom)
        mu.update(point.adds)
        for atom in point.cond_starts:
            if atom not in mu:
                return fail(f"{ga.name} deletes its own durative condition", t, atom)
            active[atom] += 1
    missing = sorted(instance.goal_ids - mu)
    if missing:
        end = snaps[-1][0] if snaps else Fraction(0)
        return fail("goal not achieved", end, missing[0])
    return Verdict(True)
