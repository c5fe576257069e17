import itertools
import math
import random

import pytest

from correlator.calculus import AssumptionKind, Belief, Cardinality, Possibilistic, Probabilistic
from correlator.engine import Engine, Environment, path_group
from correlator.temporal import Delay, Interval, TemporalConstraint


def belief(v: float) -> Belief:
    return Belief(p=v, n=v)


def small_engine(bound: float = 0.0) -> Engine:
    engine = Engine(Possibilistic(), bound)
    engine.add_assumption("a", belief(0.9))
    engine.add_assumption("b", belief(0.6))
    engine.add_assumption("e", belief(0.8), AssumptionKind.CAUSATION)
    return engine


def ids(envs) -> list[set[str]]:
    return [set(e.assumptions) for e in envs]


def test_label_of_an_assumption():
    engine = small_engine()
    assert ids(engine.query_label(engine.node("a"), math.inf)) == [{"a"}]


def test_label_is_minimal_and_ordered():
    engine = small_engine()
    goal = engine.add_node("goal")
    engine.add_justification(goal, [engine.node("a")], ["e"])
    engine.add_justification(goal, [engine.node("b")])
    engine.add_justification(goal, [engine.node("a"), engine.node("b")], ["e"])
    # a,e costs 0.2; b costs 0.4; a,b,e is subsumed by b
    assert ids(engine.query_label(goal, math.inf)) == [{"a", "e"}, {"b"}]


def test_bound_blocks_costly_environments():
    engine = small_engine()
    goal = engine.add_node("goal")
    engine.add_justification(goal, [engine.node("a")], ["e"])
    engine.add_justification(goal, [engine.node("b")])
    assert ids(engine.query_label(goal, 0.25)) == [{"a", "e"}]
    assert ids(engine.query_label(goal, 0.5)) == [{"a", "e"}, {"b"}]


def test_raise_bound_returns_the_delta():
    engine = small_engine()
    goal = engine.add_node("goal")
    engine.add_justification(goal, [engine.node("a")], ["e"])
    engine.add_justification(goal, [engine.node("b")])
    assert ids(engine.raise_bound(goal, 0.25)) == [{"a", "e"}]
    assert ids(engine.raise_bound(goal, 0.5)) == [{"b"}]
    assert engine.raise_bound(goal, 0.5) == []
    with pytest.raises(ValueError):
        engine.raise_bound(goal, 0.1)


def test_label_reports_exhaustion():
    engine = small_engine(bound=0.25)
    goal = engine.add_node("goal")
    engine.add_justification(goal, [engine.node("a")], ["e"])
    engine.add_justification(goal, [engine.node("b")])
    label = engine.label(goal)
    assert label.bound == 0.25
    assert ids(label.environments) == [{"a", "e"}]


def test_disjoint_assumptions_never_combine():
    engine = small_engine()
    engine.declare_disjoint("a", "b")
    goal = engine.add_node("goal")
    engine.add_justification(goal, [engine.node("a"), engine.node("b")])
    assert engine.query_label(goal, math.inf) == []


def test_zero_belief_assumption_is_never_emitted():
    engine = Engine(Probabilistic())
    engine.add_assumption("never", Belief(p=0.0))
    assert engine.query_label(engine.node("never"), math.inf) == []


def test_temporal_conflict_removes_the_environment():
    engine = small_engine()
    early = engine.add_node("early")
    late = engine.add_node("late")
    engine.add_justification(early, [engine.node("a")], constraints=[TemporalConstraint.event("x.s", Interval(5, 10))])
    engine.add_justification(late, [engine.node("a")], constraints=[TemporalConstraint.event("x.s", Interval(95, 100))])
    both = engine.add_node("both")
    engine.add_justification(both, [early, late])
    assert engine.query_label(both, math.inf) == []


def test_intervals_intersect():
    engine = small_engine()
    first = engine.add_node("first")
    second = engine.add_node("second")
    engine.add_justification(first, [engine.node("a")], constraints=[TemporalConstraint.event("x.s", Interval(5, 10))])
    engine.add_justification(second, [engine.node("a")], constraints=[TemporalConstraint.event("x.s", Interval(7, 12))])
    both = engine.add_node("both")
    engine.add_justification(both, [first, second])
    [env] = engine.query_label(both, math.inf)
    assert env.exists == (("x.s", Interval(7, 10)),)


def test_delay_back_projects_antecedent_windows():
    engine = small_engine()
    leaf = engine.add_node("leaf")
    engine.add_justification(leaf, [engine.node("a")], constraints=[TemporalConstraint.event("x.s", Interval(100, 100))])
    effect = engine.add_node("effect")
    engine.add_justification(effect, [leaf], delay=Delay(5, 60))
    [env] = engine.query_label(effect, math.inf)
    assert env.exists == (("x.s", Interval(40, 95)),)

    # The justification's own constraints are not shifted
    narrowed = engine.add_node("narrowed")
    engine.add_justification(narrowed, [leaf], delay=Delay(5, 60),
                             constraints=[TemporalConstraint.event("x.s", Interval(50, 200))])
    [env] = engine.query_label(narrowed, math.inf)
    assert env.exists == (("x.s", Interval(50, 95)),)


def test_single_path_discipline():
    engine = small_engine()
    via_1 = engine.add_node("via 1")
    via_2 = engine.add_node("via 2")
    engine.add_justification(via_1, [engine.node("a")], path_id="h#1")
    engine.add_justification(via_2, [engine.node("a")], path_id="h#2")
    joined = engine.add_node("joined")
    engine.add_justification(joined, [via_1, via_2], path_id="g#1")
    assert engine.query_label(joined, math.inf) == []
    # The conjunction of observations is exempt
    root = engine.add_node("root")
    engine.add_justification(root, [via_1, via_2], single_path=False)
    assert ids(engine.query_label(root, math.inf)) == [{"a"}]


def test_path_group():
    assert path_group("bus.shed#2") == "bus.shed#"
    assert path_group("bus.shed~4") == "bus.shed~"


def test_cycles_and_foreign_nodes_are_rejected():
    engine = small_engine()
    first = engine.add_node("first")
    second = engine.add_node("second")
    with pytest.raises(ValueError):
        engine.add_justification(first, [second])
    with pytest.raises(KeyError):
        engine.add_justification(second, [first], ["unknown"])
    with pytest.raises(KeyError):
        engine.add_justification(second, [small_engine().node("a")])
    with pytest.raises(ValueError):
        engine.add_assumption("a", belief(0.5))


def test_subsumption():
    loose = Environment(frozenset({"a"}), exists=(("x", Interval(0, 10)),))
    tight = Environment(frozenset({"a", "b"}), exists=(("x", Interval(2, 5)),))
    assert loose.subsumes(tight)
    assert not tight.subsumes(loose)
    narrow_normal = Environment(frozenset({"a"}), during=(("y", Interval.prefix(5)),))
    wide_normal = Environment(frozenset({"a"}), during=(("y", Interval.prefix(9)),))
    assert narrow_normal.subsumes(wide_normal)
    assert not wide_normal.subsumes(narrow_normal)


def random_network(rng: random.Random, calculus) -> tuple[Engine, list]:
    engine = Engine(calculus)
    nodes = [engine.add_assumption(f"a{k}", belief(round(rng.uniform(0.05, 0.99), 2)),
                                   AssumptionKind.CAUSE if rng.random() < 0.5 else AssumptionKind.CAUSATION)
             for k in range(rng.randint(2, 7))]
    for k in range(rng.randint(2, 8)):
        node = engine.add_node(f"n{k}")
        for _ in range(rng.randint(1, 3)):
            engine.add_justification(node, rng.sample(nodes, rng.randint(1, min(3, len(nodes)))))
        nodes.append(node)
    return engine, nodes


@pytest.mark.parametrize("calculus", [Possibilistic(), Probabilistic(), Cardinality()], ids=lambda c: c.name)
def test_emissions_are_in_cost_order(calculus):
    rng = random.Random(11)
    for _ in range(100):
        engine, nodes = random_network(rng, calculus)
        for node in nodes:
            engine.query_label(node, math.inf)
        costs = [cost for _, cost in engine.emissions]
        assert costs == sorted(costs)


def test_anytime_labels_grow_with_the_bound():
    rng = random.Random(3)
    for _ in range(50):
        engine, nodes = random_network(rng, Probabilistic())
        node = rng.choice(nodes)
        b1, b2 = sorted(rng.uniform(0, 8) for _ in range(2))
        first = engine.query_label(node, b1)
        second = engine.query_label(node, b2)
        assert first == [e for e in second if e.cost <= b1]


def test_raise_bound_deltas_are_disjoint_and_complete():
    rng = random.Random(4)
    for _ in range(50):
        engine, nodes = random_network(rng, Probabilistic())
        node = rng.choice(nodes)
        deltas = []
        for bound in sorted(rng.uniform(0, 8) for _ in range(4)):
            deltas += engine.raise_bound(node, bound)
        assert len(deltas) == len(set(deltas))
        assert set(deltas) == set(engine.query_label(node, node.bound))


def minimal_supports(nodes: list, target) -> set[frozenset[str]]:
    """Every subset of the assumptions that derives `target`, keeping the minimal ones"""
    ids = [n.name for n in nodes if n.assumption is not None]
    found = set()
    for size in range(len(ids) + 1):
        for subset in map(frozenset, itertools.combinations(ids, size)):
            held = set()
            for node in nodes:
                if node.assumption is not None:
                    if node.name in subset:
                        held.add(node.name)
                elif any(all(a.name in held for a in j.antecedents) and set(j.causation_events) <= subset
                         for j in node.justifications):
                    held.add(node.name)
            if target.name in held:
                found.add(subset)
    return {s for s in found if not any(other < s for other in found)}


@pytest.mark.parametrize("calculus", [Possibilistic(), Probabilistic(), Cardinality()], ids=lambda c: c.name)
def test_labels_match_brute_force_supports(calculus):
    rng = random.Random(21)
    for _ in range(100):
        engine, nodes = random_network(rng, calculus)
        for node in nodes:
            assert {e.assumptions for e in engine.query_label(node, math.inf)} == minimal_supports(nodes, node)
