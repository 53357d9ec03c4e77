"""Fixed-size state vectors for a domain with bounded object counts.

Objects of each type are mapped, in name order, onto a fixed number of slots.
Every predicate grounded over slots gives one atom slot and every action schema
grounded over slots gives one action slot, so the vector length depends only on
the domain and the per-type bounds, never on a particular instance.

Feature groups, in order:

* atom slots true in mu
* atom slots in delta (multiplicity / bound)
* atom slots in the goal
* object slots in use
* pending time-points per action slot (count / bound)
* temporal digest: lower and capped upper bounds of the newest ``digest_points``
  live time-points, then the largest live lower bound and the lower bound of
  the last expanded point, all divided by ``horizon``
"""

from __future__ import annotations

import hashlib
import json
import weakref
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import Domain, GroundInstance
from .search import SearchState


class ObjectBoundError(ValueError):
    pass


@dataclass(frozen=True)
class FeatureLayout:
    types: tuple[str, ...]
    predicates: tuple[tuple[str, tuple[str, ...]], ...]
    schemas: tuple[tuple[str, tuple[str, ...]], ...]
    type_bounds: tuple[tuple[str, int], ...]
    horizon: float = 100.0
    digest_points: int = 8
    _offsets: dict = field(default=None, compare=False, repr=False)

    @classmethod
    def for_domain(
        cls, domain: Domain, bound: int | dict[str, int], horizon: float = 100.0, digest_points: int = 8
    ) -> "FeatureLayout":
        if isinstance(bound, int):
            bounds = {t: bound for t in domain.types}
        else:
            bounds = {t: int(bound.get(t, 0)) for t in domain.types}
        return cls(
            types=tuple(domain.types),
            predicates=tuple((p.name, tuple(p.params)) for p in domain.predicates),
            schemas=tuple((s.name, tuple(t for _, t in s.params)) for s in domain.actions),
            type_bounds=tuple(sorted(bounds.items())),
            horizon=float(horizon),
            digest_points=digest_points,
        )

    def __post_init__(self):
        bounds = dict(self.type_bounds)
        offsets: dict = {"pred": {}, "schema": {}, "type": {}}
        n = 0
        for name, params in self.predicates:
            offsets["pred"][name] = n
            n += _count(params, bounds)
        n_atoms = n
        n = 0
        for t in self.types:
            offsets["type"][t] = n
            n += bounds[t]
        n_objects = n
        n = 0
        for name, params in self.schemas:
            offsets["schema"][name] = n
            n += _count(params, bounds)
        n_actions = n
        offsets["sizes"] = (n_atoms, n_objects, n_actions)
        text = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        offsets["digest"] = hashlib.sha256(text.encode()).hexdigest()[:16]
        object.__setattr__(self, "_offsets", offsets)

    @property
    def n_atoms(self) -> int:
        return self._offsets["sizes"][0]

    @property
    def n_objects(self) -> int:
        return self._offsets["sizes"][1]

    @property
    def n_actions(self) -> int:
        return self._offsets["sizes"][2]

    @property
    def n_digest(self) -> int:
        return 2 * self.digest_points + 2

    @property
    def size(self) -> int:
        return 3 * self.n_atoms + self.n_objects + self.n_actions + self.n_digest

    @property
    def bound(self) -> int:
        return max([b for _, b in self.type_bounds] or [1])

    def to_json(self) -> dict:
        return {
            "types": list(self.types),
            "predicates": [[n, list(p)] for n, p in self.predicates],
            "schemas": [[n, list(p)] for n, p in self.schemas],
            "type_bounds": [[t, b] for t, b in self.type_bounds],
            "horizon": self.horizon,
            "digest_points": self.digest_points,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "FeatureLayout":
        return cls(
            types=tuple(doc["types"]),
            predicates=tuple((n, tuple(p)) for n, p in doc["predicates"]),
            schemas=tuple((n, tuple(p)) for n, p in doc["schemas"]),
            type_bounds=tuple((t, int(b)) for t, b in doc["type_bounds"]),
            horizon=float(doc["horizon"]),
            digest_points=int(doc["digest_points"]),
        )

    def digest(self) -> str:
        return self._offsets["digest"]

    def _slot(self, kind: str, name: str, params: Sequence[str], args: Sequence[str], obj_slot: dict) -> int:
        bounds = dict(self.type_bounds)
        idx = 0
        for t, a in zip(params, args):
            idx = idx * bounds[t] + obj_slot[a]
        return self._offsets[kind][name] + idx


def _count(params: Sequence[str], bounds: dict[str, int]) -> int:
    n = 1
    for t in params:
        n *= bounds[t]
    return n


@dataclass
class _InstanceMap:
    atom_slot: np.ndarray
    action_slot: np.ndarray
    goal_slots: np.ndarray
    object_slots: np.ndarray


_maps: "weakref.WeakKeyDictionary[GroundInstance, dict]" = weakref.WeakKeyDictionary()


def instance_map(layout: FeatureLayout, instance: GroundInstance) -> _InstanceMap:
    per = _maps.setdefault(instance, {})
    key = layout.digest()
    if key in per:
        return per[key]
    if tuple(p.name for p in instance.domain.predicates) != tuple(n for n, _ in layout.predicates):
        raise ValueError("instance domain does not match the feature layout")
    bounds = dict(layout.type_bounds)
    obj_slot: dict[str, int] = {}
    object_slots = []
    for t in layout.types:
        objs = instance.problem.objects_of(t)
        if len(objs) > bounds[t]:
            raise ObjectBoundError(f"{len(objs)} objects of type {t!r} exceed the bound {bounds[t]}")
        for k, o in enumerate(objs):
            obj_slot[o] = k
            object_slots.append(layout._offsets["type"][t] + k)
    pred_params = dict(layout.predicates)
    schema_params = dict(layout.schemas)
    atom_slot = np.array(
        [layout._slot("pred", a.predicate, pred_params[a.predicate], a.args, obj_slot) for a in instance.atoms],
        dtype=np.int64,
    )
    action_slot = np.array(
        [layout._slot("schema", g.schema, schema_params[g.schema], g.args, obj_slot) for g in instance.actions],
        dtype=np.int64,
    )
    m = _InstanceMap(
        atom_slot,
        action_slot,
        atom_slot[sorted(instance.goal_ids)] if instance.goal_ids else np.zeros(0, dtype=np.int64),
        np.array(object_slots, dtype=np.int64),
    )
    per[key] = m
    return m


def vectorize(layout: FeatureLayout, state: SearchState, instance: GroundInstance) -> np.ndarray:
    out = np.zeros(layout.size)
    fill(layout, state, instance, out)
    return out


def vectorize_many(layout: FeatureLayout, items: Sequence[tuple[SearchState, GroundInstance]]) -> np.ndarray:
    out = np.zeros((len(items), layout.size))
    for row, (state, instance) in zip(out, items):
        fill(layout, state, instance, row)
    return out


def fill(layout: FeatureLayout, state: SearchState, instance: GroundInstance, out: np.ndarray) -> None:
    m = instance_map(layout, instance)
    na, no, nact = layout.n_atoms, layout.n_objects, layout.n_actions
    k = float(layout.bound)
    if state.mu:
        out[m.atom_slot[list(state.mu)]] = 1.0
    for atom in state.delta:
        out[na + m.atom_slot[atom]] += 1.0 / k
    out[2 * na + m.goal_slots] = 1.0
    base = 3 * na
    out[base + m.object_slots] = 1.0
    base += no
    for lst in state.agenda:
        out[base + m.action_slot[lst[0].action]] += len(lst) / k
    base += nact
    stn = state.stn
    lo = stn.lower_bounds()
    hi = stn.upper_bounds()
    cap = 2.0 * layout.horizon
    n_pts = len(lo)
    recent = range(max(1, n_pts - layout.digest_points), n_pts)
    for j, r in enumerate(recent):
        out[base + 2 * j] = float(lo[r]) / layout.horizon + 0.0
        out[base + 2 * j + 1] = min(float(hi[r]), cap) / layout.horizon
    base += 2 * layout.digest_points
    out[base] = float(max(lo)) / layout.horizon + 0.0
    out[base + 1] = float(stn.bounds(state.omega)[0]) / layout.horizon + 0.0


def type_counts(instances: Sequence[GroundInstance]) -> dict[str, int]:
    """Largest number of objects of each type over a set of instances."""
    counts: dict[str, int] = {}
    for inst in instances:
        for t in inst.domain.types:
            counts[t] = max(counts.get(t, 0), len(inst.problem.objects_of(t)))
    return counts
