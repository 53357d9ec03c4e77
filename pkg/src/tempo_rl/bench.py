"""Instance generators for three temporally expressive domain families.

* MatchCellar: fuses are mended while a lit match provides light.
* Kitting: robots collect components and deliver them while an operator is present.
* MAJSP: agents carry items between machines that process them in a fixed route.

All generators are pure functions of their arguments and seed and target desk
scale (tens of ground actions).
"""

from __future__ import annotations

import csv
import json
import random
from pathlib import Path
from typing import Sequence

from .model import GroundInstance, ground, parse_document


def _at(n: int = 0) -> dict:
    return {"at": [n, 1]}


_END = {"fraction_of_duration": [1, 1]}


def _cond(atom, start, end=None, value=True) -> dict:
    return {"atom": atom, "value": value, "interval": [start, end if end is not None else start]}


def _eff(atom, time, value=True) -> dict:
    return {"atom": atom, "value": value, "time": time}


def _action(name, params, duration, conditions, effects) -> dict:
    return {
        "name": name,
        "params": [{"name": n, "type": t} for n, t in params],
        "duration": [[duration, 1], [duration, 1]],
        "conditions": conditions,
        "effects": effects,
    }


# ------------------------------------------------------------- MatchCellar

MATCHCELLAR_BOUND = 10
MATCH_DURATION = 6
MEND_DURATION = 2


def matchcellar_domain() -> dict:
    return {
        "domain": "matchcellar",
        "types": ["match", "fuse"],
        "predicates": [
            {"name": "handfree", "params": []},
            {"name": "unused", "params": ["match"]},
            {"name": "light", "params": ["match"]},
            {"name": "unmended", "params": ["fuse"]},
            {"name": "mended", "params": ["fuse"]},
        ],
        "actions": [
            _action(
                "light_match",
                [("m", "match")],
                MATCH_DURATION,
                [_cond(["unused", "m"], _at())],
                [_eff(["unused", "m"], _at(), False), _eff(["light", "m"], _at()), _eff(["light", "m"], _END, False)],
            ),
            _action(
                "mend_fuse",
                [("f", "fuse"), ("m", "match")],
                MEND_DURATION,
                [
                    _cond(["handfree"], _at()),
                    _cond(["unmended", "f"], _at()),
                    _cond(["light", "m"], _at(), _END),
                ],
                [
                    _eff(["handfree"], _at(), False),
                    _eff(["unmended", "f"], _at(), False),
                    _eff(["mended", "f"], _END),
                    _eff(["handfree"], _END),
                ],
            ),
        ],
    }


def gen_matchcellar_doc(n_fuses: int, n_matches: int, seed: int) -> dict:
    rng = random.Random(f"matchcellar:{n_fuses}:{n_matches}:{seed}")
    fuses = [f"f{i}" for i in range(n_fuses)]
    matches = [f"m{i}" for i in range(n_matches)]
    goal_fuses = fuses if n_fuses <= 1 else sorted(rng.sample(fuses, rng.randint(max(1, n_fuses - 1), n_fuses)))
    doc = matchcellar_domain()
    doc.update(
        name=f"matchcellar-f{n_fuses}-m{n_matches}-s{seed}",
        objects=[{"name": m, "type": "match"} for m in matches] + [{"name": f, "type": "fuse"} for f in fuses],
        init=[["handfree"]] + [["unused", m] for m in matches] + [["unmended", f] for f in fuses],
        goal=[["mended", f] for f in goal_fuses],
        bound=MATCHCELLAR_BOUND,
    )
    return doc


# ----------------------------------------------------------------- Kitting

KITTING_BOUND = 10


def kitting_domain() -> dict:
    return {
        "domain": "kitting",
        "types": ["robot", "comp", "loc"],
        "predicates": [
            {"name": "at", "params": ["robot", "loc"]},
            {"name": "comp_at", "params": ["comp", "loc"]},
            {"name": "carrying", "params": ["robot", "comp"]},
            {"name": "delivered", "params": ["comp"]},
            {"name": "link", "params": ["loc", "loc"]},
            {"name": "depot", "params": ["loc"]},
            {"name": "operator_idle", "params": []},
            {"name": "operator_present", "params": []},
        ],
        "actions": [
            _action(
                "move",
                [("r", "robot"), ("a", "loc"), ("b", "loc")],
                2,
                [_cond(["at", "r", "a"], _at()), _cond(["link", "a", "b"], _at())],
                [_eff(["at", "r", "a"], _at(), False), _eff(["at", "r", "b"], _END)],
            ),
            _action(
                "pick",
                [("r", "robot"), ("c", "comp"), ("l", "loc")],
                1,
                [_cond(["comp_at", "c", "l"], _at()), _cond(["at", "r", "l"], _at(), _END)],
                [_eff(["comp_at", "c", "l"], _at(), False), _eff(["carrying", "r", "c"], _END)],
            ),
            # the operator only comes when a robot waits at the depot with a component
            _action(
                "call_operator",
                [("r", "robot"), ("c", "comp"), ("l", "loc")],
                5,
                [
                    _cond(["operator_idle"], _at()),
                    _cond(["carrying", "r", "c"], _at()),
                    _cond(["depot", "l"], _at()),
                    _cond(["at", "r", "l"], _at()),
                ],
                [
                    _eff(["operator_idle"], _at(), False),
                    _eff(["operator_present"], _at()),
                    _eff(["operator_present"], _END, False),
                    _eff(["operator_idle"], _END),
                ],
            ),
            _action(
                "deliver",
                [("r", "robot"), ("c", "comp"), ("l", "loc")],
                2,
                [
                    _cond(["carrying", "r", "c"], _at()),
                    _cond(["depot", "l"], _at()),
                    _cond(["at", "r", "l"], _at(), _END),
                    _cond(["operator_present"], _at(), _END),
                ],
                [_eff(["carrying", "r", "c"], _at(), False), _eff(["delivered", "c"], _END)],
            ),
        ],
    }


def gen_kitting_doc(
    n_robots: int, n_components: int, n_locations: int, seed: int, unreachable: bool = False
) -> dict:
    """Locations form a line ``l0 - l1 - ...`` with the depot at ``l0``.

    With ``unreachable`` the last location is disconnected and holds a component.
    """
    rng = random.Random(f"kitting:{n_robots}:{n_components}:{n_locations}:{seed}:{unreachable}")
    robots = [f"r{i}" for i in range(n_robots)]
    comps = [f"c{i}" for i in range(n_components)]
    locs = [f"l{i}" for i in range(n_locations)]
    links = []
    last = n_locations - 1 if unreachable and n_locations > 1 else n_locations
    for i in range(last - 1):
        links += [["link", locs[i], locs[i + 1]], ["link", locs[i + 1], locs[i]]]
    init = [["depot", locs[0]], ["operator_idle"]] + links
    for r in robots:
        init.append(["at", r, locs[rng.randrange(last)]])
    for idx, c in enumerate(comps):
        if unreachable and idx == 0 and n_locations > 1:
            where = locs[-1]
        else:
            where = locs[rng.randrange(1, last) if last > 1 else 0]
        init.append(["comp_at", c, where])
    doc = kitting_domain()
    doc.update(
        name=f"kitting-r{n_robots}-c{n_components}-l{n_locations}-s{seed}" + ("-unreach" if unreachable else ""),
        objects=[{"name": o, "type": "robot"} for o in robots]
        + [{"name": o, "type": "comp"} for o in comps]
        + [{"name": o, "type": "loc"} for o in locs],
        init=init,
        goal=[["delivered", c] for c in comps],
        bound=KITTING_BOUND,
    )
    return doc


# ------------------------------------------------------------------- MAJSP

MAJSP_BOUND = 12


def majsp_domain() -> dict:
    return {
        "domain": "majsp",
        "types": ["agent", "item", "machine", "loc"],
        "predicates": [
            {"name": "agent_at", "params": ["agent", "loc"]},
            {"name": "agent_free", "params": ["agent"]},
            {"name": "item_at", "params": ["item", "loc"]},
            {"name": "carrying", "params": ["agent", "item"]},
            {"name": "link", "params": ["loc", "loc"]},
            {"name": "machine_at", "params": ["machine", "loc"]},
            {"name": "machine_idle", "params": ["machine"]},
            {"name": "next_op", "params": ["item", "machine"]},
            {"name": "route", "params": ["item", "machine", "machine"]},
        ],
        "actions": [
            _action(
                "move",
                [("a", "agent"), ("x", "loc"), ("y", "loc")],
                2,
                [_cond(["agent_at", "a", "x"], _at()), _cond(["link", "x", "y"], _at())],
                [_eff(["agent_at", "a", "x"], _at(), False), _eff(["agent_at", "a", "y"], _END)],
            ),
            _action(
                "load",
                [("a", "agent"), ("i", "item"), ("l", "loc")],
                1,
                [
                    _cond(["item_at", "i", "l"], _at()),
                    _cond(["agent_free", "a"], _at()),
                    _cond(["agent_at", "a", "l"], _at(), _END),
                ],
                [
                    _eff(["item_at", "i", "l"], _at(), False),
                    _eff(["agent_free", "a"], _at(), False),
                    _eff(["carrying", "a", "i"], _END),
                ],
            ),
            _action(
                "unload",
                [("a", "agent"), ("i", "item"), ("l", "loc")],
                1,
                [_cond(["carrying", "a", "i"], _at()), _cond(["agent_at", "a", "l"], _at(), _END)],
                [
                    _eff(["carrying", "a", "i"], _at(), False),
                    _eff(["item_at", "i", "l"], _END),
                    _eff(["agent_free", "a"], _END),
                ],
            ),
            _action(
                "process",
                [("i", "item"), ("m", "machine"), ("l", "loc"), ("n", "machine")],
                3,
                [
                    _cond(["next_op", "i", "m"], _at()),
                    _cond(["route", "i", "m", "n"], _at()),
                    _cond(["machine_at", "m", "l"], _at()),
                    _cond(["machine_idle", "m"], _at()),
                    _cond(["item_at", "i", "l"], _at(), _END),
                ],
                [
                    _eff(["machine_idle", "m"], _at(), False),
                    _eff(["next_op", "i", "m"], _at(), False),
                    _eff(["machine_idle", "m"], _END),
                    _eff(["next_op", "i", "n"], _END),
                ],
            ),
        ],
    }


def gen_majsp_doc(n_jobs: int, n_machines: int, n_agents: int, seed: int) -> dict:
    """Each job visits one or two machines; a ``done`` pseudo-machine ends every route.

    Locations: a depot ``l0`` holding the items plus one location per machine,
    fully connected.
    """
    rng = random.Random(f"majsp:{n_jobs}:{n_machines}:{n_agents}:{seed}")
    items = [f"i{j}" for j in range(n_jobs)]
    machines = [f"m{k}" for k in range(n_machines)]
    locs = ["l0"] + [f"l{k + 1}" for k in range(n_machines)]
    init = []
    for x in locs:
        for y in locs:
            if x != y:
                init.append(["link", x, y])
    for k, m in enumerate(machines):
        init += [["machine_at", m, locs[k + 1]], ["machine_idle", m]]
    agents = [f"a{k}" for k in range(n_agents)]
    for a in agents:
        init += [["agent_at", a, "l0"], ["agent_free", a]]
    for i in items:
        length = 1 if n_machines == 1 else rng.randint(1, min(2, n_machines))
        ops = rng.sample(machines, length) + ["done"]
        init += [["item_at", i, "l0"], ["next_op", i, ops[0]]]
        for m, n in zip(ops, ops[1:]):
            init.append(["route", i, m, n])
    doc = majsp_domain()
    doc.update(
        name=f"majsp-j{n_jobs}-m{n_machines}-a{n_agents}-s{seed}",
        objects=[{"name": o, "type": "agent"} for o in agents]
        + [{"name": o, "type": "item"} for o in items]
        + [{"name": o, "type": "machine"} for o in machines + ["done"]]
        + [{"name": o, "type": "loc"} for o in locs],
        init=init,
        goal=[["next_op", i, "done"] for i in items],
        bound=MAJSP_BOUND,
    )
    return doc


# ------------------------------------------------------------------ public


def _ground(doc: dict) -> GroundInstance:
    return ground(*parse_document(doc))


def gen_matchcellar(n_fuses: int, n_matches: int, seed: int) -> GroundInstance:
    return _ground(gen_matchcellar_doc(n_fuses, n_matches, seed))


def gen_kitting(n_robots: int, n_components: int, n_locations: int, seed: int, unreachable: bool = False) -> GroundInstance:
    return _ground(gen_kitting_doc(n_robots, n_components, n_locations, seed, unreachable))


def gen_majsp(n_jobs: int, n_machines: int, n_agents: int, seed: int) -> GroundInstance:
    return _ground(gen_majsp_doc(n_jobs, n_machines, n_agents, seed))


# Desk-scale parameter ranges per family; each entry is a generator argument tuple.
FAMILY_SIZES = {
    "matchcellar": [(f, m) for f in (1, 2, 3) for m in (1, 2)],
    "kitting": [(1, c, l) for c in (1, 2) for l in (2, 3)],
    "majsp": [(j, m, 1) for j in (1, 2) for m in (1, 2)],
}

GENERATORS = {
    "matchcellar": gen_matchcellar_doc,
    "kitting": gen_kitting_doc,
    "majsp": gen_majsp_doc,
}


def generate_family(family: str, count: int, seed: int, sizes: Sequence[tuple] | None = None) -> list[dict]:
    """``count`` documents cycling through the family's size grid with derived seeds."""
    gen = GENERATORS[family]
    grid = list(sizes or FAMILY_SIZES[family])
    rng = random.Random(f"{family}:{seed}")
    docs = []
    for k in range(count):
        params = grid[k % len(grid)]
        docs.append(gen(*params, rng.randrange(2**31)))
    return docs


def write_family(docs: Sequence[dict], out_dir: str | Path, family: str) -> Path:
    """Write instance files plus a ``manifest.csv`` of names and parameters."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = out / "manifest.csv"
    with manifest.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["file", "family", "name", "objects", "bound"])
        for doc in docs:
            fname = f"{doc['name']}.json"
            (out / fname).write_text(json.dumps(doc, indent=1, sort_keys=True), encoding="utf-8")
            writer.writerow([fname, family, doc["name"], len(doc["objects"]), doc["bound"]])
    return manifest


def kfold_split(items: Sequence, k: int = 5, seed: int = 0) -> list[tuple[list, list]]:
    """Shuffle and partition into ``k`` near-equal folds; returns (train, test) pairs."""
    if k < 2 or len(items) < k:
        raise ValueError(f"need at least k={k} >= 2 instances, got {len(items)}")
    order = list(range(len(items)))
    random.Random(seed).shuffle(order)
    folds = [order[i::k] for i in range(k)]
    out = []
    for i in range(k):
        test_idx = set(folds[i])
        out.append(
            ([items[j] for j in order if j not in test_idx], [items[j] for j in sorted(folds[i])])
        )
    return out
