import math

import pytest

from correlator import dsl
from correlator.calculus import Belief
from correlator.model import ground
from correlator.temporal import Delay
from correlator.theory import compile_theory

from .conftest import CHAIN, SATELLITE


def test_parse_chain():
    model = dsl.parse(CHAIN)
    assert model.name == "chain"
    assert model.time_unit == "ticks"
    assert [u.name for u in model.units] == ["Source", "Pipe1", "Pipe2"]
    pipe = model.unit("Pipe1")
    link = pipe.behaviours[0]
    assert link.input == "i" and link.out == "o" and link.cause == "self"
    assert link.alpha == Belief(p=0.8, n=0.8)
    assert link.delay == Delay(1, 2)
    assert pipe.state("self").belief == Belief(p=0.001, n=0.95)
    assert [(c.source, c.dest) for c in model.connections] == [("src.o", "p1.i"), ("p1.o", "p2.i")]


def test_source_link_has_no_input():
    link = dsl.parse(CHAIN).unit("Source").behaviours[0]
    assert link.input is None
    assert link.alpha is None


def test_semicolons_and_comments():
    text = "model m timeunit minutes # a comment\nunit U { state s modes(failed) prior 0.1; out o; link out=o cause=s }\n"
    model = dsl.parse(text)
    assert model.time_unit == "minutes"
    assert model.unit("U").out_ports[0].name == "o"


def test_default_time_unit():
    assert dsl.parse("model m\n", time_unit="seconds").time_unit == "seconds"


def test_unbounded_delay():
    text = "model m\nunit U {\n  state s modes(failed) prior 0.1\n  in i\n  out o\n" \
           "  link in=i out=o cause=s alpha(p=0.5) delay=[3,inf]\n}\n"
    assert dsl.parse(text).unit("U").behaviours[0].delay == Delay(3, math.inf)


def test_environmental_state():
    model = dsl.parse(SATELLITE.read_text())
    assert model.unit("KuArea").state("problem").environmental
    assert not model.unit("Watchdog").state("self").environmental


@pytest.mark.parametrize("text, line", [
    ("model m\nwidget w\n", 2),
    ("model m\nunit U {\n  gadget g\n}\n", 3),
    ("model m\nunit U {\n  in i\n", 2),
    ("model m\nunit U {\n  state s modes(failed) prior high\n}\n", 3),
    ("model m\nunit U {\n  link out=o cause=s delay=[5]\n}\n", 3),
    ("model m\nunit U {\n  link out=o cause=s alpha(q=0.5)\n}\n", 3),
    ("model m\nunit U {\n  state s modes(failed) prior 1.5\n}\n", 3),
    ("model m\ninstance x\n", 2),
    ("unit U {\n}\n", 1),
])
def test_syntax_errors_carry_the_line(text, line):
    with pytest.raises(dsl.DslError) as exc:
        dsl.parse(text)
    assert exc.value.line == line


def test_dump_round_trip_satellite():
    model = dsl.load_model(SATELLITE)
    again = dsl.parse(dsl.dump(model))
    assert again == model
    assert compile_theory(ground(again)) == compile_theory(ground(model))


def test_dump_round_trip_chain():
    model = dsl.parse(CHAIN)
    assert dsl.parse(dsl.dump(model)) == model
