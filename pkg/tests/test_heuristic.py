import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempo_rl import kernels
from tempo_rl.bench import gen_kitting, gen_majsp, gen_matchcellar
from tempo_rl.heuristic import hadd, hff, h_sym
from tempo_rl.search import initial_state, is_goal, iter_tree, successors

from .helpers import END, action, build, doc, eff
from .oracles import bfs_distance


def _states(inst, depth=4, limit=150):
    out = []
    for s in iter_tree(initial_state(inst), inst, depth):
        out.append(s)
        if len(out) >= limit:
            break
    return out


def test_goal_states_have_zero(matchcellar_small):
    for s in iter_tree(initial_state(matchcellar_small), matchcellar_small, 6):
        if is_goal(s, matchcellar_small):
            assert hff(s, matchcellar_small) == 0
            assert hadd(s, matchcellar_small) == 0


def test_single_action_counts_two_events():
    inst = build(doc([action("go", 1, effects=[eff(["q"], END)])], init=[], goal=[["q"]], predicates=[("q", ())]))
    assert hff(initial_state(inst), inst) == 2
    assert hadd(initial_state(inst), inst) == 2


def test_pending_point_costs_one():
    inst = build(doc([action("go", 1, effects=[eff(["q"], END)])], init=[], goal=[["q"]], predicates=[("q", ())]))
    (_, child), = successors(initial_state(inst), inst)
    assert hff(child, inst) == 1


def test_unreachable_goal_is_infinite():
    inst = gen_kitting(1, 1, 3, 0, unreachable=True)
    assert math.isinf(hff(initial_state(inst), inst))
    assert math.isinf(hadd(initial_state(inst), inst))
    assert math.isinf(bfs_distance(initial_state(inst), inst, 8, successors, is_goal))


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 1000))
def test_hff_at_most_hadd(seed):
    for inst in (gen_matchcellar(2, 2, seed), gen_kitting(1, 2, 3, seed), gen_majsp(2, 1, 1, seed)):
        for s in _states(inst, 3, 40):
            f, a = hff(s, inst), hadd(s, inst)
            assert math.isinf(f) == math.isinf(a)
            if not math.isinf(f):
                assert f <= a


def test_infinite_means_dead_end_in_bounded_tree():
    # an infinite estimate must never sit above a reachable goal
    for inst in (gen_matchcellar(1, 1, 0), gen_majsp(1, 1, 1, 0)):
        for s in _states(inst, 6, 400):
            if math.isinf(hff(s, inst)):
                assert math.isinf(bfs_distance(s, inst, 6, successors, is_goal))


def test_h_sym_dispatch(kitting_small):
    s = initial_state(kitting_small)
    assert h_sym(s, kitting_small, "hff") == hff(s, kitting_small)
    assert h_sym(s, kitting_small, "hadd") == hadd(s, kitting_small)
    with pytest.raises(ValueError):
        h_sym(s, kitting_small, "nope")


@pytest.mark.skipif(kernels.compiled is None, reason="compiled kernels not built")
def test_backends_agree():
    rng = random.Random(0)
    for inst in (gen_kitting(2, 2, 3, 1), gen_majsp(2, 2, 1, 1), gen_matchcellar(3, 2, 1)):
        states = _states(inst, 5, 200)
        rng.shuffle(states)
        values = []
        for name in ("python", "cython"):
            kernels.use(name)
            values.append([(hff(s, inst), hadd(s, inst)) for s in states[:60]])
        kernels.use("cython")
        assert values[0] == values[1]
