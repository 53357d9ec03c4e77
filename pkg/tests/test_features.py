import numpy as np
import pytest

from tempo_rl.bench import gen_kitting, gen_matchcellar
from tempo_rl.features import FeatureLayout, ObjectBoundError, type_counts, vectorize, vectorize_many
from tempo_rl.search import ExpandTimePoint, StartAction, initial_state, is_goal, iter_tree, succ, successors


def layout_for(inst, bound=10):
    return FeatureLayout.for_domain(inst.domain, bound)


def test_length_depends_only_on_domain_and_bound():
    a, b = gen_matchcellar(1, 1, 0), gen_matchcellar(3, 2, 5)
    la, lb = layout_for(a), layout_for(b)
    assert la == lb and la.size == lb.size
    assert vectorize(la, initial_state(a), a).shape == vectorize(lb, initial_state(b), b).shape == (la.size,)


def test_identical_states_vectorize_identically(matchcellar_small):
    lay = layout_for(matchcellar_small)
    s1 = succ(initial_state(matchcellar_small), StartAction(0), matchcellar_small)
    s2 = succ(initial_state(matchcellar_small), StartAction(0), matchcellar_small)
    assert np.array_equal(vectorize(lay, s1, matchcellar_small), vectorize(lay, s2, matchcellar_small))


def test_initial_and_goal_differ_in_goal_atoms(matchcellar_small):
    inst = matchcellar_small
    lay = layout_for(inst)
    root = initial_state(inst)
    goal = next(s for s in iter_tree(root, inst, 6) if is_goal(s, inst))
    a, b = vectorize(lay, root, inst), vectorize(lay, goal, inst)
    mu_diff = set(np.nonzero(a[: lay.n_atoms] != b[: lay.n_atoms])[0])
    changed = {inst.atoms[i] for i in root.mu ^ goal.mu}
    assert len(mu_diff) == len(changed)
    goal_block = slice(2 * lay.n_atoms, 3 * lay.n_atoms)
    assert np.array_equal(a[goal_block], b[goal_block])


def test_stn_distinct_states_differ_in_digest():
    from .helpers import END, action, build, doc, eff

    inst = build(
        doc(
            [action("fast", 1, effects=[eff(["q"], END)]), action("slow", 3, effects=[eff(["q"], END)])],
            init=[],
            goal=[["q"]],
            predicates=[("q", ())],
        )
    )
    lay = layout_for(inst)
    ends = []
    for a in (0, 1):
        s = succ(initial_state(inst), StartAction(a), inst)
        head = s.agenda[0][0]
        ends.append(succ(s, ExpandTimePoint(0, head.action, head.point), inst))
    assert ends[0].mu == ends[1].mu and ends[0].agenda == ends[1].agenda == ()
    x0, x1 = (vectorize(lay, s, inst) for s in ends)
    digest = slice(lay.size - lay.n_digest, lay.size)
    assert np.array_equal(x0[: digest.start], x1[: digest.start])
    assert not np.array_equal(x0[digest], x1[digest])


def test_empty_delta_gives_zero_multiplicity(kitting_small):
    lay = layout_for(kitting_small)
    x = vectorize(lay, initial_state(kitting_small), kitting_small)
    assert not x[lay.n_atoms : 2 * lay.n_atoms].any()


def test_object_bound_enforced():
    inst = gen_kitting(1, 3, 3, 0)
    lay = FeatureLayout.for_domain(inst.domain, {"robot": 1, "comp": 2, "loc": 3})
    with pytest.raises(ObjectBoundError):
        vectorize(lay, initial_state(inst), inst)


def test_type_counts_and_per_type_bounds():
    insts = [gen_kitting(1, 2, 3, 0), gen_kitting(2, 1, 2, 0)]
    assert type_counts(insts) == {"robot": 2, "comp": 2, "loc": 3}
    lay = FeatureLayout.for_domain(insts[0].domain, type_counts(insts))
    xs = vectorize_many(lay, [(initial_state(i), i) for i in insts])
    assert xs.shape == (2, lay.size)


def test_layout_json_round_trip_and_digest():
    inst = gen_kitting(1, 2, 3, 0)
    lay = layout_for(inst)
    again = FeatureLayout.from_json(lay.to_json())
    assert again == lay and again.digest() == lay.digest()
    other = FeatureLayout.for_domain(inst.domain, 9)
    assert other.digest() != lay.digest()


def test_no_negative_zero():
    inst = gen_kitting(1, 2, 3, 0)
    lay = layout_for(inst)
    for s in iter_tree(initial_state(inst), inst, 3):
        x = vectorize(lay, s, inst)
        assert not np.any(np.signbit(x) & (x == 0))


def test_successor_features_in_unit_scale():
    inst = gen_kitting(1, 2, 3, 1)
    lay = layout_for(inst)
    xs = vectorize_many(lay, [(c, inst) for _, c in successors(initial_state(inst), inst)])
    assert np.all(np.isfinite(xs)) and xs.max() <= 2.0 and xs.min() >= 0.0
