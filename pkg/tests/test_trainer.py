import csv
import math
import random

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempo_rl.bench import gen_matchcellar
from tempo_rl.features import FeatureLayout, type_counts
from tempo_rl.mdp import MdpConfig
from tempo_rl.trainer import (
    Record,
    ReplayBuffer,
    TrainConfig,
    batch_loss,
    bellman_target,
    behavior_action,
    exploration_probabilities,
    fit_step,
    regression_targets,
    batch_targets,
    train,
)
from tempo_rl.mlp import make_optimizer
from tempo_rl.valuefn import ValueModel

from .helpers import one_step


def _model(instances, schema="counting", mode="full", seed=0, **kw):
    cfg = MdpConfig.for_schema(schema, **kw)
    layout = FeatureLayout.for_domain(instances[0].domain, type_counts(instances))
    return cfg, ValueModel.create(layout, mode, cfg, seed=seed)


def _record(rewards, fixed=None, n_model=0, size=4):
    rewards = np.asarray(rewards, float)
    fixed = np.zeros_like(rewards) if fixed is None else np.asarray(fixed, float)
    return Record(
        np.zeros(size, np.float32), 0.0, True, rewards, fixed, np.zeros((n_model, size), np.float32), np.zeros(n_model)
    )


def test_exploration_probabilities():
    assert exploration_probabilities([0, 1]) == pytest.approx([2 / 3, 1 / 3])
    assert exploration_probabilities([math.inf, math.inf]) == [0.5, 0.5]
    assert exploration_probabilities([math.inf, 3]) == [0.0, 1.0]


def test_behavior_matches_probabilities():
    rng = random.Random(0)
    picks = [behavior_action([0, 0], [0, 1], 1.0, rng) for _ in range(6000)]
    assert abs(picks.count(0) / 6000 - 2 / 3) < 0.03


def test_behavior_greedy_at_zero_epsilon():
    rng = random.Random(0)
    assert all(behavior_action([-5, -1, -3], [0, 9, 0], 0.0, rng) == 1 for _ in range(50))
    with pytest.raises(ValueError):
        behavior_action([], [], 0.0, rng)


def test_epsilon_schedule():
    cfg = TrainConfig(episodes=100)
    assert cfg.epsilon(0) == 1.0
    assert cfg.epsilon(10) == pytest.approx(0.55)
    assert cfg.epsilon(20) == 0.1 and cfg.epsilon(99) == 0.1
    with pytest.raises(ValueError):
        TrainConfig(lr=0)


def test_bellman_target_examples():
    # truncated, counting with heuristic bootstrap, h = 7
    assert bellman_target(np.array([-1.0]), np.array([-7.0]), np.array([]), 1.0) == -8
    # goal under binary rewards
    assert bellman_target(np.array([0.0, 1.0]), np.array([np.nan, 0.0]), np.array([0.5]), 0.99) == 1
    # interior state takes gamma * v of the best successor
    assert bellman_target(np.array([0.0, 0.0]), np.array([np.nan, np.nan]), np.array([0.2, 0.6]), 0.99) == pytest.approx(
        0.99 * 0.6
    )


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 20), st.lists(st.integers(0, 1000), max_size=60))
def test_buffer_fifo(capacity, values):
    buf = ReplayBuffer(capacity)
    for v in values:
        buf.push(_record([float(v)]))
    assert len(buf) == min(capacity, len(values))
    assert [r.rewards[0] for r in buf.items()] == [float(v) for v in values[-capacity:]] if values else True


def test_buffer_reward_audit():
    cfg = MdpConfig.for_schema("counting", delta_h=50)
    buf = ReplayBuffer(4, audit=cfg)
    buf.push(_record([-1.0, -100.0]))
    with pytest.raises(AssertionError):
        buf.push(_record([0.0]))
    with pytest.raises(ValueError):
        ReplayBuffer(0)


def test_trivial_domain_learns():
    inst = one_step()
    cfg, model = _model([inst], "counting", delta_rl=10, delta_h=10)
    tcfg = TrainConfig(episodes=500, batch_size=32, lr=1e-3, optimizer="adam", seed=0)
    result = train(tcfg, [inst], cfg, model)
    assert max(log.goal_fraction for log in result.curve) >= 0.99


def test_loss_non_increasing_on_frozen_buffer():
    inst = one_step()
    cfg, model = _model([inst], "counting", delta_rl=10, delta_h=10)
    result = train(TrainConfig(episodes=60, batch_size=10_000, seed=0), [inst], cfg, model)
    batch = result.buffer.items()
    goal = regression_targets(model, batch, batch_targets(model, batch))
    xs = np.stack([r.x for r in batch]).astype(float)
    opt = make_optimizer("sgd", 1e-4)
    losses = [fit_step(model, opt, xs, goal) for _ in range(100)]
    losses.append(batch_loss(model, xs, goal))
    assert all(b <= a + 1e-12 for a, b in zip(losses, losses[1:]))


def test_training_deterministic_and_logged(tmp_path):
    inst = gen_matchcellar(1, 1, 0)
    curves = []
    for k in range(2):
        cfg, model = _model([inst], "binary", delta_rl=20)
        path = tmp_path / f"c{k}.csv"
        train(TrainConfig(episodes=40, batch_size=16, seed=3), [inst], cfg, model, log_path=path)
        curves.append(path.read_text())
    assert curves[0] == curves[1]
    rows = list(csv.reader(curves[0].splitlines()))
    assert rows[0] == ["episode", "steps", "outcome", "return", "rolling_goal_fraction", "loss"]
    assert len(rows) == 41 and {r[2] for r in rows[1:]} <= {"goal", "dead", "trunc"}


def test_rolling_fraction_uses_full_window():
    inst = one_step()
    cfg, model = _model([inst], "counting", delta_rl=10, delta_h=10)
    result = train(TrainConfig(episodes=5, batch_size=100, window=100), [inst], cfg, model)
    goals = sum(log.outcome == "goal" for log in result.curve)
    assert result.curve[-1].goal_fraction == goals / 100


def test_empty_training_set():
    inst = one_step()
    cfg, model = _model([inst])
    with pytest.raises(ValueError):
        train(TrainConfig(episodes=1), [], cfg, model)


@pytest.mark.parametrize("schema", ["counting", "binary"])
def test_tabular_backup_matches_bfs(schema):
    from fractions import Fraction

    from tempo_rl.mdp import Mdp, MdpState
    from tempo_rl.search import initial_state, is_goal, successors
    from tempo_rl.trainer import _outcomes

    from .oracles import bfs_distance

    inst = gen_matchcellar(1, 1, 0)
    cfg = MdpConfig.for_schema(schema, delta_rl=8, delta_h=50, bootstrap="constant")
    mdp = Mdp([inst], cfg)
    gamma = Fraction(99, 100) if schema == "binary" else 1
    nodes, frontier = {}, [MdpState(initial_state(inst), 0)]
    while frontier:
        s = frontier.pop()
        outs = _outcomes(mdp, s)
        nodes[id(s)] = (s, outs, [])
        for o in outs:
            if o.kind == "model":
                child = MdpState(o.child, 0)
                nodes[id(s)][2].append(id(child))
                frontier.append(child)
    table = {k: 0 for k in nodes}
    for _ in range(cfg.delta_rl + 2):
        new = {}
        for k, (s, outs, kids) in nodes.items():
            if not outs:
                new[k] = cfg.dead_reward
                continue
            kid_vals = iter(table[c] for c in kids)
            conts = [o.cont if o.cont is not None else next(kid_vals) for o in outs]
            new[k] = max(Fraction(o.reward) + gamma * Fraction(c) for o, c in zip(outs, conts))
        table = new
    for k, (s, outs, _) in nodes.items():
        d = bfs_distance(s.search, inst, cfg.delta_rl - s.search.depth, successors, is_goal)
        if math.isinf(d) or not outs:
            continue
        expected = -d if schema == "counting" else gamma ** (d - 1)
        assert abs(float(table[k]) - float(expected)) <= 1e-9
