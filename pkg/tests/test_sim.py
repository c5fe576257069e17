import math
import random

import pytest

from correlator.calculus import Probabilistic
from correlator.explain import Observation, ObservationKind, correlate
from correlator.sim import Injection, simulate

from .conftest import build

CERTAIN_CHAIN = """
model certain
unit Source {
  state self modes(failed) prior 0.01 necessity 0.9
  out o
  link out=o cause=self
}
unit Pipe {
  state self modes(failed) prior 0.001 necessity 0.95
  in i
  out o
  link in=i out=o cause=self alpha(p=1.0,n=1.0) delay=[2,4]
}
instance src : Source
instance p : Pipe
connect src.o -> p.i
observe p.o
"""


def test_injection_parse():
    injection = Injection.parse("ovt.self=failed@0")
    assert injection == Injection("ovt.self=failed", 0)
    assert injection.state == "ovt.self" and injection.mode == "failed"
    for bad in ("ovt.self=failed", "ovt.self=failed@soon", "@3"):
        with pytest.raises(ValueError):
            Injection.parse(bad)


def test_deterministic_propagation():
    theory = build(CERTAIN_CHAIN)
    log = simulate(theory, [Injection("src.self=failed", 3)], seed=1, horizon=100)
    [record] = log.records
    assert record.port == "p.o" and record.kind is ObservationKind.FIRST_ABNORMAL
    assert 5 <= record.time <= 7
    assert log.port_times["src.o"] == 3


def test_horizon_cuts_the_log():
    theory = build(CERTAIN_CHAIN)
    log = simulate(theory, [Injection("src.self=failed", 3)], seed=1, horizon=4, report_normals=True)
    assert log.records == (Observation.normal_through("p.o", 4),)


def test_reproducible_for_equal_seeds(satellite):
    injections = [Injection("ovt.self=failed", 0)]
    assert simulate(satellite, injections, seed=7, horizon=200) == simulate(satellite, injections, seed=7, horizon=200)


def test_unknown_cause(satellite):
    with pytest.raises(KeyError):
        simulate(satellite, [Injection("ovt.self=melted", 0)], seed=1)


def test_double_injection(satellite):
    with pytest.raises(ValueError):
        simulate(satellite, [Injection("ovt.self=failed", 0), Injection("ovt.self=failed", 4)], seed=1)


def test_unbounded_delay_cannot_be_simulated():
    theory = build(CERTAIN_CHAIN.replace("delay=[2,4]", "delay=[2,inf]"))
    with pytest.raises(ValueError):
        simulate(theory, [Injection("src.self=failed", 0)], seed=1)



def test_unbounded_delay_is_rejected_whatever_the_events_do():
    text = CERTAIN_CHAIN.replace("delay=[2,4]", "delay=[2,inf]").replace("alpha(p=1.0,n=1.0)", "alpha(p=0.3,n=0.3)")
    theory = build(text)
    for seed in range(20):
        with pytest.raises(ValueError, match="unbounded delay"):
            simulate(theory, [Injection("src.self=failed", 0)], seed=seed)
    with pytest.raises(ValueError, match="unbounded delay"):
        simulate(theory, [], seed=0)


def test_a_failed_link_blocks_propagation():
    theory = build(CERTAIN_CHAIN)
    # The pipe fails only after the source fault has passed through it
    log = simulate(theory, [Injection("src.self=failed", 0), Injection("p.self=failed", 50)], seed=2, horizon=100)
    assert log.port_times["p.o"] <= 4


def test_symptom_frequency_matches_the_path_prior():
    theory = build(CERTAIN_CHAIN.replace("alpha(p=1.0,n=1.0)", "alpha(p=0.3,n=0.3)"))
    runs = 10_000
    hits = sum(1 for seed in range(runs)
               if simulate(theory, [Injection("src.self=failed", 0)], seed=seed, horizon=100).records)
    assert abs(hits / runs - 0.3) < 0.02


def test_simulated_logs_are_explained(satellite):
    rng = random.Random(17)
    causes = list(satellite.ground.cause_beliefs)
    for _ in range(30):
        injected = rng.sample(causes, rng.randint(1, 2))
        if len({c.split("=")[0] for c in injected}) < len(injected):
            continue
        injections = [Injection(c, rng.randint(0, 50)) for c in injected]
        log = simulate(satellite, injections, seed=rng.randint(0, 10_000), horizon=400)
        if not log.records:
            continue
        eset = correlate(satellite, log.records, Probabilistic(), math.inf)
        truth = {i.cause: i.time for i in injections}
        assert any(all(f"{c.variable}={c.mode}" in truth and c.constraint.interval.contains(truth[f"{c.variable}={c.mode}"])
                       for c in e.causes) for e in eset)


def test_common_cause_never_produces_distant_symptoms(fork):
    for seed in range(10_000):
        log = simulate(fork, [Injection("c.self=failed", 0)], seed=seed, horizon=200)
        times = {r.port: r.time for r in log.records}
        if len(times) == 2:
            assert abs(times["la.o"] - times["lb.o"]) <= 5
