"""Independent reference implementations used only by the tests."""

from __future__ import annotations

import math
from collections import deque
from fractions import Fraction


def floyd_warshall(n, constraints):
    """All-pairs distances over exact rationals; ``None`` on a negative cycle.

    Adds the implicit ``t_i >= 0`` edge of every point.
    """
    d = [[math.inf] * n for _ in range(n)]
    for a in range(n):
        d[a][a] = Fraction(0)
        if a:
            d[a][0] = min(d[a][0], Fraction(0))
    for i, j, w in constraints:
        d[j][i] = min(d[j][i], Fraction(w))
    for k in range(n):
        dk = d[k]
        for a in range(n):
            dak = d[a][k]
            if dak == math.inf:
                continue
            da = d[a]
            for b in range(n):
                c = dak + dk[b]
                if c < da[b]:
                    da[b] = c
    if any(d[a][a] < 0 for a in range(n)):
        return None
    return d


def bfs_distance(state, instance, depth_cap, successors, is_goal):
    """Shortest number of events from ``state`` to a goal, or ``inf``."""
    if is_goal(state, instance):
        return 0
    frontier = deque([(state, 0)])
    while frontier:
        s, d = frontier.popleft()
        if d >= depth_cap:
            continue
        for _, child in successors(s, instance):
            if is_goal(child, instance):
                return d + 1
            frontier.append((child, d + 1))
    return math.inf


def gradient_probe_errors(mode, schema, delta_h=50.0, probes=64, seed=0, step=1e-5):
    """Relative errors between production gradients and central differences.

    The analytic gradient is read off one SGD step with learning rate 1 through
    the trainer's own update path; the numeric one perturbs single weights and
    re-evaluates the squared-error loss.
    """
    import numpy as np

    from tempo_rl.mlp import MLP, SGD
    from tempo_rl.trainer import batch_loss, fit_step
    from tempo_rl.valuefn import activation_range

    class _Layout:
        size = 6

    class _Model:
        layout = _Layout()

        def __init__(self, net):
            self.net, self.mode, self.schema, self.delta_h = net, mode, schema, delta_h

        def forward(self, x):
            from tempo_rl.valuefn import activate

            raw, _ = self.net.forward(x)
            return activate(raw, self.mode, self.schema, self.delta_h)

    rng = np.random.default_rng(seed)
    net = MLP([6, 12, 12, 1], rng)
    for p in net.params:
        p[...] = rng.normal(0.0, 0.5, size=p.shape)
    x = rng.normal(size=(9, 6))
    lo, hi = activation_range(mode, schema, delta_h)
    y = rng.uniform(lo, hi, size=9)
    model = _Model(net)

    stepped = net.copy()
    fit_step(_Model(stepped), SGD(1.0), x, y)
    analytic = [p - q for p, q in zip(net.params, stepped.params)]

    errors = []
    params = net.params
    for _ in range(probes):
        k = int(rng.integers(len(params)))
        idx = tuple(int(rng.integers(s)) for s in params[k].shape)
        orig = params[k][idx]
        params[k][idx] = orig + step
        up = batch_loss(model, x, y)
        params[k][idx] = orig - step
        down = batch_loss(model, x, y)
        params[k][idx] = orig
        numeric = (up - down) / (2 * step)
        a = analytic[k][idx]
        errors.append(abs(a - numeric) / max(abs(a), abs(numeric), 1e-8))
    return errors


class Undecided(Exception):
    """The plan has coinciding events, which the simulation does not order."""


def simulate_plan(instance, plan):
    """Replay ``plan`` on the lifted schemas over world snapshots.

    Returns ``(valid, reason)``. Each distinct event time holds the events of
    exactly one plan entry; otherwise ``Undecided`` is raised. Conditions are
    read from the snapshot before the time, effects build the snapshot after.
    A condition over ``[a, b]`` must hold before and after ``a``, across every
    time strictly between, and before ``b``.
    """
    schemas = {a.name: a for a in instance.domain.actions}
    state = set(instance.problem.init)
    events = {}  # time -> (entry, checks, adds, dels)
    spans = []  # (atom, value, a, b)
    for pos, entry in enumerate(plan):
        name, _, rest = entry.action.partition("(")
        args = tuple(x for x in rest.rstrip(")").split(",") if x)
        schema = schemas[name]
        if not schema.dmin <= entry.duration <= schema.dmax:
            return False, "duration"
        binding = {p: a for (p, _), a in zip(schema.params, args)}

        def ground(atom):
            return type(atom)(atom.predicate, tuple(binding[x] for x in atom.args))

        def when(offset):
            rel = offset.value if offset.kind == "at" else offset.value * entry.duration
            return entry.start + rel

        offsets = {}
        for c in schema.conditions:
            for off in {c.start, c.end}:
                offsets.setdefault(when(off), set()).add(off)
        for e in schema.effects:
            offsets.setdefault(when(e.time), set()).add(e.time)
        offsets.setdefault(entry.start, set())
        offsets.setdefault(entry.start + entry.duration, set())
        for t, offs in offsets.items():
            if t in events or len(offs) > 1:
                raise Undecided(t)
            events[t] = (pos, [], set(), set())
        for c in schema.conditions:
            a, b = when(c.start), when(c.end)
            if a == b:
                events[a][1].append((ground(c.atom), c.value))
            else:
                spans.append((ground(c.atom), c.value, a, b))
        for e in schema.effects:
            (events[when(e.time)][2] if e.value else events[when(e.time)][3]).add(ground(e.atom))
    times = sorted(events)
    before, after = {}, {}
    for t in times:
        _, checks, adds, dels = events[t]
        before[t] = frozenset(state)
        for atom, value in checks:
            if (atom in state) != value:
                return False, f"condition at {t}"
        state = (state - dels) | adds
        after[t] = frozenset(state)
    for atom, value, a, b in spans:
        if (atom in before[a]) != value or (atom in before[b]) != value:
            return False, "durative endpoint"
        for t in times:
            if a <= t < b and (atom in after[t]) != value:
                return False, "durative interior"
    if not set(instance.problem.goal) <= state:
        return False, "goal"
    return True, "ok"
