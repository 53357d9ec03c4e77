import math
import random
from fractions import Fraction

import pytest

from tempo_rl.bench import gen_kitting, gen_matchcellar
from tempo_rl.heuristic import hff
from tempo_rl.mdp import (
    DEAD,
    GIVE_UP,
    Mdp,
    MdpConfig,
    MdpState,
    phi,
    reward,
    sample_initial,
    truncation_target,
    value_iteration,
)
from tempo_rl.search import initial_state, is_goal, successors
from tempo_rl.valuefn import value_to_heuristic

from .oracles import bfs_distance


def test_config_validation():
    with pytest.raises(ValueError):
        MdpConfig(reward="binary", gamma=1.0)
    with pytest.raises(ValueError):
        MdpConfig(reward="counting", gamma=0.9)
    with pytest.raises(ValueError):
        MdpConfig(bootstrap="nope")
    assert MdpConfig.for_schema("binary").gamma == 0.99
    assert MdpConfig.for_schema("counting").gamma == 1.0


def test_rewards():
    b = MdpConfig.for_schema("binary")
    c = MdpConfig.for_schema("counting", delta_h=50)
    assert reward(b, False, True) == 1 and reward(b, False, False) == 0 and reward(b, True, False) == -1
    assert reward(c, False, True) == -1 and reward(c, False, False) == -1 and reward(c, True, False) == -100


@pytest.mark.parametrize(
    "schema, bootstrap, h, expected",
    [
        ("binary", "constant", 7, 0.0),
        ("binary", "constant", math.inf, 0.0),
        ("counting", "constant", 7, -50.0),
        ("binary", "heuristic", 7, 0.99**6),
        ("binary", "heuristic", math.inf, -1.0),
        ("counting", "heuristic", 7, -7.0),
        ("counting", "heuristic", math.inf, -100.0),
    ],
)
def test_truncation_targets(schema, bootstrap, h, expected):
    cfg = MdpConfig.for_schema(schema, delta_h=50, bootstrap=bootstrap)
    assert truncation_target(h, cfg) == expected


def test_truncated_counting_heuristic_example():
    cfg = MdpConfig.for_schema("counting", delta_h=50, bootstrap="heuristic")
    assert cfg.step_reward + 1.0 * truncation_target(7, cfg) == -8


def test_phi_ranges():
    b = MdpConfig.for_schema("binary")
    c = MdpConfig.for_schema("counting", delta_h=50)
    for h in (1, 3, 40, math.inf):
        assert -1 <= phi(h, b) <= 1
        assert -100 <= phi(h, c) <= 0


def test_step_and_truncation(matchcellar_small):
    cfg = MdpConfig.for_schema("counting", delta_rl=2, delta_h=50, bootstrap="heuristic")
    mdp = Mdp([matchcellar_small], cfg)
    s = MdpState(initial_state(matchcellar_small), 0)
    t1 = mdp.step(s, mdp.actions(s)[0])
    assert t1.reward == -1 and not t1.terminal and not t1.truncated
    t2 = mdp.step(t1.next_state, mdp.actions(t1.next_state)[0])
    assert t2.truncated and not t2.terminal
    assert t2.target == -hff(t2.next_state.search, matchcellar_small)


def test_dead_end_gives_up():
    inst = gen_kitting(1, 1, 3, 0, unreachable=True)
    cfg = MdpConfig.for_schema("counting", delta_h=50)
    mdp = Mdp([inst], cfg)
    s = MdpState(initial_state(inst), 0)
    assert mdp.actions(s) == [GIVE_UP]
    t = mdp.step(s, GIVE_UP)
    assert t.next_state is DEAD and t.terminal and t.reward == -100
    assert mdp.actions(DEAD) == []
    with pytest.raises(ValueError):
        mdp.step(DEAD, GIVE_UP)


def test_goal_transition_is_terminal(matchcellar_small):
    cfg = MdpConfig.for_schema("binary", delta_rl=20)
    mdp = Mdp([matchcellar_small], cfg)
    rng = random.Random(0)
    outcomes = set()
    for _ in range(50):
        s = MdpState(initial_state(matchcellar_small), 0)
        while True:
            t = mdp.step(s, rng.choice(mdp.actions(s)))
            if t.terminal or t.truncated:
                break
            s = t.next_state
        if t.next_state is DEAD:
            assert t.reward == -1
            outcomes.add("dead")
        elif t.terminal:
            assert t.reward == 1 and mdp.is_goal(t.next_state)
            outcomes.add("goal")
    assert "goal" in outcomes


def test_sample_initial():
    insts = [gen_matchcellar(1, 1, k) for k in range(3)]
    rng = random.Random(0)
    picks = {sample_initial(insts, rng).problem for _ in range(30)}
    assert picks == {0, 1, 2}
    with pytest.raises(ValueError):
        sample_initial([], rng)


def test_value_iteration_counting_matches_bfs():
    inst = gen_matchcellar(2, 1, 0)
    cfg = MdpConfig.for_schema("counting", delta_rl=8, delta_h=50, bootstrap="constant")
    mdp = Mdp([inst], cfg)
    for state, v in value_iteration(mdp, MdpState(initial_state(inst), 0)):
        d = bfs_distance(state, inst, cfg.delta_rl - state.depth, successors, is_goal)
        if d != math.inf:
            assert v == -d


def test_value_iteration_binary_exact():
    inst = gen_matchcellar(1, 2, 0)
    cfg = MdpConfig.for_schema("binary", delta_rl=8, bootstrap="constant")
    mdp = Mdp([inst], cfg)
    g = Fraction(99, 100)
    for state, v in value_iteration(mdp, MdpState(initial_state(inst), 0), gamma=g):
        d = bfs_distance(state, inst, cfg.delta_rl - state.depth, successors, is_goal)
        if d not in (0, math.inf):
            assert abs(v - g ** (d - 1)) < 1e-9
            assert abs(value_to_heuristic(float(v), "binary", 0.99, 1000.0) - d) < 1e-6
