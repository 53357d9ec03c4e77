"""Domains, problems and ground instances.

Instances are read from a reduced JSON format (see ``docs/instance_format.md``).
Every duration and offset is an exact rational so the temporal network never has
to reason about floating point error.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Any, Iterable, NamedTuple

FORMAT_VERSION = 1
DEFAULT_EPSILON = Fraction(1, 100)


class ParseError(ValueError):
    """Raised for malformed or inconsistent instance documents."""

    def __init__(self, message: str, line: int | None = None, column: int | None = None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(message + where)


class Atom(NamedTuple):
    predicate: str
    args: tuple[str, ...]

    def __str__(self) -> str:
        return f"{self.predicate}({','.join(self.args)})"


@dataclass(frozen=True)
class Predicate:
    name: str
    params: tuple[str, ...]


@dataclass(frozen=True)
class Offset:
    """Anchor of a time-point relative to the start of its action."""

    kind: str  # "at" | "fraction"
    value: Fraction


@dataclass(frozen=True)
class Condition:
    atom: Atom  # arguments are parameter names
    value: bool
    start: Offset
    end: Offset


@dataclass(frozen=True)
class Effect:
    atom: Atom
    value: bool
    time: Offset


@dataclass(frozen=True)
class ActionSchema:
    name: str
    params: tuple[tuple[str, str], ...]  # (name, type)
    dmin: Fraction
    dmax: Fraction
    conditions: tuple[Condition, ...]
    effects: tuple[Effect, ...]


@dataclass(frozen=True)
class Domain:
    name: str
    types: tuple[str, ...]
    predicates: tuple[Predicate, ...]
    actions: tuple[ActionSchema, ...]

    @cached_property
    def predicate_map(self) -> dict[str, Predicate]:
        return {p.name: p for p in self.predicates}


@dataclass(frozen=True)
class Problem:
    name: str
    objects: tuple[tuple[str, str], ...]  # (name, type), sorted by name
    init: frozenset[Atom]
    goal: frozenset[Atom]
    bound: int
    epsilon: Fraction = DEFAULT_EPSILON

    def objects_of(self, type_name: str) -> list[str]:
        return [o for o, t in self.objects if t == type_name]


@dataclass(frozen=True)
class TimePoint:
    """One snap point of a ground action.

    ``anchor`` is the offset from the action start, or ``None`` for the end.
    """

    anchor: Fraction | None
    checks: tuple[tuple[int, bool], ...] = ()
    cond_starts: tuple[int, ...] = ()
    cond_ends: tuple[int, ...] = ()
    adds: tuple[int, ...] = ()
    dels: tuple[int, ...] = ()


@dataclass(frozen=True)
class GroundAction:
    index: int
    schema: str
    args: tuple[str, ...]
    dmin: Fraction
    dmax: Fraction
    points: tuple[TimePoint, ...]

    @property
    def name(self) -> str:
        return f"{self.schema}({','.join(self.args)})"


@dataclass(frozen=True, eq=False)
class GroundInstance:
    domain: Domain
    problem: Problem
    atoms: tuple[Atom, ...]
    actions: tuple[GroundAction, ...]

    @cached_property
    def atom_index(self) -> dict[Atom, int]:
        return {a: i for i, a in enumerate(self.atoms)}

    @cached_property
    def action_index(self) -> dict[str, int]:
        return {a.name: a.index for a in self.actions}

    @cached_property
    def init_ids(self) -> frozenset[int]:
        return frozenset(self.atom_index[a] for a in self.problem.init)

    @cached_property
    def goal_ids(self) -> frozenset[int]:
        return frozenset(self.atom_index[a] for a in self.problem.goal)

    @property
    def epsilon(self) -> Fraction:
        return self.problem.epsilon

    @property
    def name(self) -> str:
        return self.problem.name


# ---------------------------------------------------------------- parsing


def _rational(value: Any, where: str) -> Fraction:
    if isinstance(value, bool):
        raise ParseError(f"{where}: expected rational [num, den], got {value!r}")
    if isinstance(value, int):
        return Fraction(value)
    if (
        isinstance(value, list)
        and len(value) == 2
        and all(isinstance(v, int) and not isinstance(v, bool) for v in value)
    ):
        if value[1] == 0:
            raise ParseError(f"{where}: zero denominator")
        return Fraction(value[0], value[1])
    raise ParseError(f"{where}: expected rational [num, den], got {value!r}")


def _offset(value: Any, where: str) -> Offset:
    if not isinstance(value, dict) or len(value) != 1:
        raise ParseError(f"{where}: offset must be {{'at': ..}} or {{'fraction_of_duration': ..}}")
    ((key, raw),) = value.items()
    if key == "at":
        return Offset("at", _rational(raw, where))
    if key == "fraction_of_duration":
        return Offset("fraction", _rational(raw, where))
    raise ParseError(f"{where}: unknown offset kind {key!r}")


def _atom(value: Any, where: str) -> Atom:
    if not isinstance(value, list) or not value or not all(isinstance(v, str) for v in value):
        raise ParseError(f"{where}: atom must be a non-empty list of strings")
    return Atom(value[0], tuple(value[1:]))


def _require(doc: dict, key: str, kind: type, where: str = "document"):
    if key not in doc:
        raise ParseError(f"{where}: missing key {key!r}")
    if not isinstance(doc[key], kind):
        raise ParseError(f"{where}: {key!r} must be a {kind.__name__}")
    return doc[key]


def _find_line(text: str, needle: str) -> tuple[int | None, int | None]:
    idx = text.find(needle)
    if idx < 0:
        return None, None
    line = text.count("\n", 0, idx) + 1
    col = idx - (text.rfind("\n", 0, idx) + 1) + 1
    return line, col


def parse_document(doc: dict) -> tuple[Domain, Problem]:
    if not isinstance(doc, dict):
        raise ParseError("instance document must be a JSON object")
    types = tuple(_require(doc, "types", list))
    if not all(isinstance(t, str) for t in types):
        raise ParseError("types must be strings")
    type_set = set(types)

    objects = []
    for i, obj in enumerate(_require(doc, "objects", list)):
        where = f"objects[{i}]"
        if not isinstance(obj, dict) or "name" not in obj or "type" not in obj:
            raise ParseError(f"{where}: object needs 'name' and 'type'")
        if obj["type"] not in type_set:
            raise ParseError(f"{where}: unknown type {obj['type']!r}")
        objects.append((obj["name"], obj["type"]))
    names = [o for o, _ in objects]
    if len(set(names)) != len(names):
        raise ParseError("duplicate object names")
    obj_type = dict(objects)

    predicates = []
    for i, p in enumerate(_require(doc, "predicates", list)):
        where = f"predicates[{i}]"
        if not isinstance(p, dict) or "name" not in p:
            raise ParseError(f"{where}: predicate needs 'name'")
        params = tuple(p.get("params", []))
        for t in params:
            if t not in type_set:
                raise ParseError(f"{where}: unknown type {t!r}")
        predicates.append(Predicate(p["name"], params))
    pred_map = {p.name: p for p in predicates}

    def check_atom(atom: Atom, binding: dict[str, str], where: str) -> None:
        pred = pred_map.get(atom.predicate)
        if pred is None:
            raise ParseError(f"{where}: unknown predicate {atom.predicate!r}")
        if len(atom.args) != len(pred.params):
            raise ParseError(f"{where}: arity mismatch for {atom.predicate!r}")
        for arg, t in zip(atom.args, pred.params):
            if arg not in binding:
                raise ParseError(f"{where}: unknown object {arg!r}")
            if binding[arg] != t:
                raise ParseError(f"{where}: {arg!r} is not of type {t!r}")

    actions = []
    for i, a in enumerate(_require(doc, "actions", list)):
        where = f"actions[{i}]"
        if not isinstance(a, dict) or "name" not in a:
            raise ParseError(f"{where}: action needs 'name'")
        params = []
        for j, prm in enumerate(a.get("params", [])):
            if not isinstance(prm, dict) or "name" not in prm or "type" not in prm:
                raise ParseError(f"{where}.params[{j}]: needs 'name' and 'type'")
            if prm["type"] not in type_set:
                raise ParseError(f"{where}.params[{j}]: unknown type {prm['type']!r}")
            params.append((prm["name"], prm["type"]))
        binding = dict(params)
        dur = _require(a, "duration", list, where)
        if len(dur) != 2:
            raise ParseError(f"{where}: duration must be [dmin, dmax]")
        dmin, dmax = _rational(dur[0], where), _rational(dur[1], where)
        if dmin > dmax:
            raise ParseError(f"{where}: duration bound violation (dmin > dmax)")
        if dmin <= 0:
            raise ParseError(f"{where}: duration must be positive")
        conds = []
        for j, c in enumerate(a.get("conditions", [])):
            cw = f"{where}.conditions[{j}]"
            atom = _atom(c.get("atom"), cw)
            check_atom(atom, binding, cw)
            interval = c.get("interval")
            if not isinstance(interval, list) or len(interval) not in (1, 2):
                raise ParseError(f"{cw}: interval must be [offset] or [offset, offset]")
            start = _offset(interval[0], cw)
            end = _offset(interval[-1], cw)
            conds.append(Condition(atom, bool(c.get("value", True)), start, end))
        effs = []
        for j, e in enumerate(a.get("effects", [])):
            ew = f"{where}.effects[{j}]"
            atom = _atom(e.get("atom"), ew)
            check_atom(atom, binding, ew)
            effs.append(Effect(atom, bool(e.get("value", True)), _offset(e.get("time"), ew)))
        actions.append(ActionSchema(a["name"], tuple(params), dmin, dmax, tuple(conds), tuple(effs)))
    if len({a.name for a in actions}) != len(actions):
        raise ParseError("duplicate action names")

    init = []
    for i, raw in enumerate(_require(doc, "init", list)):
        atom = _atom(raw, f"init[{i}]")
        check_atom(atom, obj_type, f"init[{i}]")
        init.append(atom)
    goal = []
    for i, raw in enumerate(_require(doc, "goal", list)):
        atom = _atom(raw, f"goal[{i}]")
        check_atom(atom, obj_type, f"goal[{i}]")
        goal.append(atom)

    bound = doc.get("bound", len(objects))
    if not isinstance(bound, int) or len(objects) > bound:
        raise ParseError(f"object bound violated: {len(objects)} objects > bound {bound}")
    epsilon = _rational(doc["epsilon"], "epsilon") if "epsilon" in doc else DEFAULT_EPSILON
    if epsilon <= 0:
        raise ParseError("epsilon must be positive")

    domain = Domain(doc.get("domain", "domain"), types, tuple(predicates), tuple(actions))
    problem = Problem(
        doc.get("name", "problem"),
        tuple(sorted(objects)),
        frozenset(init),
        frozenset(goal),
        bound,
        epsilon,
    )
    return domain, problem


def parse_instance(text: str) -> GroundInstance:
    """Parse an instance document and ground it."""
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"syntax error: {exc.msg}", exc.lineno, exc.colno) from exc
    try:
        domain, problem = parse_document(doc)
    except ParseError as exc:
        if exc.line is None:
            # Best effort location: first quoted token of the message.
            token = str(exc).split("'")
            if len(token) >= 3:
                line, col = _find_line(text, f'"{token[1]}"')
                if line is not None:
                    raise ParseError(str(exc), line, col) from None
        raise
    return ground(domain, problem)


def load_instance(path) -> GroundInstance:
    with open(path, encoding="utf-8") as fh:
        return parse_instance(fh.read())


# --------------------------------------------------------------- grounding


def _anchor(offset: Offset, schema: ActionSchema) -> Fraction | None:
    if offset.kind == "fraction":
        f = offset.value
        if f < 0 or f > 1:
            raise ParseError(f"{schema.name}: fraction_of_duration outside [0, 1]")
        if f == 0:
            return Fraction(0)
        if f == 1:
            return None
        if schema.dmin != schema.dmax:
            raise ParseError(f"{schema.name}: fractional offsets need a fixed duration")
        value = f * schema.dmin
    else:
        value = offset.value
        if value < 0 or value > schema.dmin:
            raise ParseError(f"{schema.name}: offset {value} outside [0, dmin]")
    if schema.dmin == schema.dmax and value == schema.dmax:
        return None
    return value


def _point_key(anchor: Fraction | None) -> tuple[int, Fraction]:
    return (1, Fraction(0)) if anchor is None else (0, anchor)


def _compile_schema(schema: ActionSchema) -> list[tuple[Fraction | None, dict]]:
    """Group a schema's conditions/effects by time-point (lifted)."""
    anchors: set = {Fraction(0), None}
    for c in schema.conditions:
        anchors.add(_anchor(c.start, schema))
        anchors.add(_anchor(c.end, schema))
    for e in schema.effects:
        anchors.add(_anchor(e.time, schema))
    ordered = sorted(anchors, key=_point_key)
    slots = {a: {"checks": [], "cstart": [], "cend": [], "adds": [], "dels": []} for a in ordered}
    for c in schema.conditions:
        a, b = _anchor(c.start, schema), _anchor(c.end, schema)
        if ordered.index(a) > ordered.index(b):
            raise ParseError(f"{schema.name}: condition interval ends before it starts")
        if a == b:
            slots[a]["checks"].append((c.atom, c.value))
        else:
            if not c.value:
                raise ParseError(f"{schema.name}: negative durative conditions are not supported")
            slots[a]["cstart"].append(c.atom)
            slots[b]["cend"].append(c.atom)
    for e in schema.effects:
        slots[_anchor(e.time, schema)]["adds" if e.value else "dels"].append(e.atom)
    return [(a, slots[a]) for a in ordered]


def _atom_universe(domain: Domain, problem: Problem) -> list[Atom]:
    atoms = []
    for pred in sorted(domain.predicates, key=lambda p: p.name):
        pools = [sorted(problem.objects_of(t)) for t in pred.params]
        for combo in itertools.product(*pools):
            atoms.append(Atom(pred.name, tuple(combo)))
    return atoms


def ground(domain: Domain, problem: Problem) -> GroundInstance:
    """Exhaustive grounding; actions ordered by schema name then argument names."""
    atoms = _atom_universe(domain, problem)
    index = {a: i for i, a in enumerate(atoms)}
    for a in problem.init | problem.goal:
        if a not in index:
            raise ParseError(f"atom {a} not in the grounded universe")
    ground_actions: list[GroundAction] = []
    for schema in sorted(domain.actions, key=lambda s: s.name):
        lifted = _compile_schema(schema)
        pools = [sorted(problem.objects_of(t)) for _, t in schema.params]
        pnames = [n for n, _ in schema.params]
        for combo in itertools.product(*pools):
            binding = dict(zip(pnames, combo))

            def gid(atom: Atom) -> int:
                return index[Atom(atom.predicate, tuple(binding.get(x, x) for x in atom.args))]

            points = []
            for anchor, slot in lifted:
                points.append(
                    TimePoint(
                        anchor=anchor,
                        checks=tuple((gid(a), v) for a, v in slot["checks"]),
                        cond_starts=tuple(gid(a) for a in slot["cstart"]),
                        cond_ends=tuple(gid(a) for a in slot["cend"]),
                        adds=tuple(sorted({gid(a) for a in slot["adds"]})),
                        dels=tuple(sorted({gid(a) for a in slot["dels"]})),
                    )
                )
            ground_actions.append(
                GroundAction(len(ground_actions), schema.name, combo, schema.dmin, schema.dmax, tuple(points))
            )
    return GroundInstance(domain, problem, tuple(atoms), tuple(ground_actions))


# ----------------------------------------------------------- serialization


def rational_json(x: Fraction) -> list[int]:
    return [x.numerator, x.denominator]


def _offset_json(o: Offset) -> dict:
    return {"at" if o.kind == "at" else "fraction_of_duration": rational_json(o.value)}


def to_document(domain: Domain, problem: Problem) -> dict:
    return {
        "version": FORMAT_VERSION,
        "domain": domain.name,
        "name": problem.name,
        "types": list(domain.types),
        "predicates": [{"name": p.name, "params": list(p.params)} for p in domain.predicates],
        "actions": [
            {
                "name": a.name,
                "params": [{"name": n, "type": t} for n, t in a.params],
                "duration": [rational_json(a.dmin), rational_json(a.dmax)],
                "conditions": [
                    {
                        "atom": [c.atom.predicate, *c.atom.args],
                        "value": c.value,
                        "interval": [_offset_json(c.start), _offset_json(c.end)],
                    }
                    for c in a.conditions
                ],
                "effects": [
                    {"atom": [e.atom.predicate, *e.atom.args], "value": e.value, "time": _offset_json(e.time)}
                    for e in a.effects
                ],
            }
            for a in domain.actions
        ],
        "objects": [{"name": o, "type": t} for o, t in problem.objects],
        "init": [[a.predicate, *a.args] for a in sorted(problem.init)],
        "goal": [[a.predicate, *a.args] for a in sorted(problem.goal)],
        "bound": problem.bound,
        "epsilon": rational_json(problem.epsilon),
    }


def serialize_instance(instance: GroundInstance) -> str:
    return json.dumps(to_document(instance.domain, instance.problem), indent=1, sort_keys=True)


def same_structure(a: GroundInstance, b: GroundInstance) -> bool:
    return (
        a.domain == b.domain
        and a.problem == b.problem
        and a.atoms == b.atoms
        and a.actions == b.actions
    )


def bounded(problems: Iterable[Problem], k: int) -> bool:
    return all(len(p.objects) <= k for p in problems)
