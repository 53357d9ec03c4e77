import csv
import json
import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tempo_rl.bench import (
    FAMILY_SIZES,
    gen_kitting,
    gen_majsp,
    gen_matchcellar,
    gen_matchcellar_doc,
    generate_family,
    kfold_split,
    write_family,
)
from tempo_rl.heuristic import hff
from tempo_rl.model import load_instance
from tempo_rl.planner import PlannerConfig, solve
from tempo_rl.search import initial_state, is_goal, successors

from .oracles import bfs_distance


def test_matchcellar_one_each_needs_two_actions():
    inst = gen_matchcellar(1, 1, 0)
    result = solve(inst, PlannerConfig())
    assert result.solved and len(result.plan.actions) == 2
    # two durative actions means four events at least; BFS confirms four is optimal
    assert bfs_distance(initial_state(inst), inst, 6, successors, is_goal) == 4


def test_matchcellar_without_matches_is_dead():
    inst = gen_matchcellar(3, 0, 0)
    assert math.isinf(hff(initial_state(inst), inst))


def test_kitting_solvability_labels():
    assert bfs_distance(initial_state(gen_kitting(1, 1, 2, 0)), gen_kitting(1, 1, 2, 0), 12, successors, is_goal) < math.inf
    dead = gen_kitting(1, 1, 3, 0, unreachable=True)
    assert math.isinf(hff(initial_state(dead), dead))


def test_majsp_tiny_is_solvable():
    inst = gen_majsp(1, 1, 1, 0)
    assert bfs_distance(initial_state(inst), inst, 14, successors, is_goal) < math.inf


def test_majsp_plan_length_grows_with_jobs():
    lengths = []
    for jobs in (1, 2, 3):
        per_seed = [len(solve(gen_majsp(jobs, 1, 1, s), PlannerConfig()).plan.actions) for s in range(3)]
        lengths.append(sum(per_seed) / len(per_seed))
    assert lengths[0] < lengths[1] < lengths[2]


@pytest.mark.parametrize("family", sorted(FAMILY_SIZES))
def test_generated_instances_parse_within_bound(family, tmp_path):
    docs = generate_family(family, 6, seed=1)
    assert docs == generate_family(family, 6, seed=1)
    manifest = write_family(docs, tmp_path, family)
    rows = list(csv.DictReader(manifest.open()))
    assert len(rows) == 6
    for row in rows:
        inst = load_instance(tmp_path / row["file"])
        assert len(inst.problem.objects) <= inst.problem.bound == int(row["bound"])


def test_seeded_generation_is_deterministic():
    assert json.dumps(gen_matchcellar_doc(2, 1, 5)) == json.dumps(gen_matchcellar_doc(2, 1, 5))


def test_kfold_sizes():
    folds = kfold_split(list(range(10)), 5, seed=0)
    assert [len(test) for _, test in folds] == [2] * 5
    with pytest.raises(ValueError):
        kfold_split([1, 2], 5)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 6), st.integers(0, 20), st.integers(0, 99))
def test_kfold_partition(k, extra, seed):
    items = list(range(k + extra))
    folds = kfold_split(items, k, seed)
    tests = [set(t) for _, t in folds]
    assert set().union(*tests) == set(items)
    assert sum(len(t) for t in tests) == len(items)
    assert max(map(len, tests)) - min(map(len, tests)) <= 1
    for train, test in folds:
        assert set(train) | set(test) == set(items) and not set(train) & set(test)
    assert folds == kfold_split(items, k, seed)
