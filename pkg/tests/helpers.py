"""Small instance builders shared by the tests."""

from __future__ import annotations

from tempo_rl.model import ground, parse_document


def at(n=0):
    return {"at": [n, 1] if isinstance(n, int) else n}


END = {"fraction_of_duration": [1, 1]}


def doc(actions, init, goal, predicates, types=("thing",), objects=(("a", "thing"),), epsilon=None, bound=None):
    d = {
        "domain": "toy",
        "name": "toy",
        "types": list(types),
        "objects": [{"name": n, "type": t} for n, t in objects],
        "predicates": [{"name": p, "params": list(ps)} for p, ps in predicates],
        "actions": actions,
        "init": [list(a) for a in init],
        "goal": [list(a) for a in goal],
    }
    if epsilon is not None:
        d["epsilon"] = epsilon
    if bound is not None:
        d["bound"] = bound
    return d


def action(name, duration, conditions=(), effects=(), params=()):
    dur = duration if isinstance(duration, list) else [[duration, 1], [duration, 1]]
    return {
        "name": name,
        "params": [{"name": n, "type": t} for n, t in params],
        "duration": dur,
        "conditions": list(conditions),
        "effects": list(effects),
    }


def cond(atom, start, end=None, value=True):
    return {"atom": list(atom), "interval": [start] if end is None else [start, end], "value": value}


def eff(atom, time, value=True):
    return {"atom": list(atom), "time": time, "value": value}


def build(d):
    return ground(*parse_document(d))


def one_step():
    """Goal reachable by starting and ending a single action."""
    return build(
        doc(
            [action("go", 1, effects=[eff(["done"], END)])],
            init=[],
            goal=[["done"]],
            predicates=[("done", ())],
        )
    )

