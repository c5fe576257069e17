import random
from pathlib import Path

import pytest

from correlator import dsl
from correlator.calculus import Cardinality, Possibilistic, Probabilistic
from correlator.config import Config
from correlator.explain import Observation
from correlator.model import ground
from correlator.theory import CausalTheory, compile_theory

SATELLITE = Path(__file__).parent.parent / "correlator" / "fixtures" / "satellite.fm"

# src -> p1 ([1,2]) -> p2 ([2,3]); a symptom on p2.o at 10 puts the source fault in [5,7]
CHAIN = """
model chain timeunit ticks
unit Source {
  state self modes(failed) prior 0.01 necessity 0.9
  out o
  link out=o cause=self
}
unit Pipe1 {
  state self modes(failed) prior 0.001 necessity 0.95
  in i
  out o
  link in=i out=o cause=self alpha(p=0.8,n=0.8) delay=[1,2]
}
unit Pipe2 {
  state self modes(failed) prior 0.001 necessity 0.95
  in i
  out o
  link in=i out=o cause=self alpha(p=0.9,n=0.9) delay=[2,3]
}
instance src : Source
instance p1 : Pipe1
instance p2 : Pipe2
connect src.o -> p1.i
connect p1.o -> p2.i
observe p1.o
observe p2.o
"""

# One common cause feeding two links with delays [0,5]
FORK = """
model fork timeunit ticks
unit Common {
  state self modes(failed) prior 0.01 necessity 0.9
  out a
  out b
  link out=a cause=self
  link out=b cause=self
}
unit Link {
  state self modes(failed) prior 0.001 necessity 0.95
  in i
  out o
  link in=i out=o cause=self alpha(p=0.9,n=0.9) delay=[0,5]
}
instance c : Common
instance la : Link
instance lb : Link
connect c.a -> la.i
connect c.b -> lb.i
observe la.o
observe lb.o
"""


def build(text: str) -> CausalTheory:
    return compile_theory(ground(dsl.parse(text)))


@pytest.fixture(autouse=True)
def reset_config():
    Config.reset()
    yield
    Config.reset()


@pytest.fixture
def satellite_path() -> Path:
    return SATELLITE


@pytest.fixture
def satellite() -> CausalTheory:
    return compile_theory(ground(dsl.load_model(SATELLITE)))


@pytest.fixture
def chain() -> CausalTheory:
    return build(CHAIN)


@pytest.fixture
def fork() -> CausalTheory:
    return build(FORK)


@pytest.fixture(params=["possibilistic", "probabilistic", "cardinality"])
def calculus(request):
    return {"possibilistic": Possibilistic, "probabilistic": Probabilistic, "cardinality": Cardinality}[request.param]()


def random_model_text(rng: random.Random) -> str:
    """
    Small random models: one or two sources feeding either a few links or one join.
    At most 8 positive assumptions, delays at most 20 ticks.
    """
    def belief() -> str:
        v = round(rng.uniform(0.05, 0.95), 2)
        return f"p={v},n={v}"

    def delay(zero_min: bool = False) -> str:
        lo = 0 if zero_min else rng.randint(0, 10)
        return f"[{lo},{lo + rng.randint(0, 10)}]"

    lines = ["model random timeunit ticks"]
    sources = rng.randint(1, 2)
    for k in range(sources):
        v = round(rng.uniform(0.01, 0.5), 2)
        lines += [f"unit S{k} {{", f"  state self modes(failed) prior {v} necessity {1 - v}", "  out o",
                  f"  link out=o cause=self fault_delay={delay(zero_min=True)}", "}", f"instance s{k} : S{k}"]
    outputs = [f"s{k}.o" for k in range(sources)]
    observed = list(outputs)

    if sources == 2 and rng.random() < 0.5:
        lines += ["unit J {", "  in a", "  in b", "  out o",
                  f"  join2 in1=a in2=b out=o alpha({belief()}) beta({belief()}) psi({belief()}) sigma({belief()}) "
                  f"delay1={delay(True)} delay2={delay(True)} delay_joint={delay()}", "}",
                  "instance j : J", "connect s0.o -> j.a", "connect s1.o -> j.b"]
        observed.append("j.o")
    else:
        for k in range(rng.randint(1, 3 - sources + 1)):
            v = round(rng.uniform(0.01, 0.3), 2)
            source = rng.choice(outputs)
            lines += [f"unit L{k} {{", f"  state self modes(failed) prior {v} necessity {1 - v}", "  in i", "  out o",
                      f"  link in=i out=o cause=self alpha({belief()}) delay={delay()} fault_delay={delay(True)}",
                      "}", f"instance l{k} : L{k}", f"connect {source} -> l{k}.i"]
            outputs.append(f"l{k}.o")
            observed.append(f"l{k}.o")

    lines += [f"observe {port}" for port in observed]
    return "\n".join(lines) + "\n"


def random_observations(rng: random.Random, theory: CausalTheory) -> list[Observation]:
    ports = rng.sample(list(theory.observables), rng.randint(1, min(3, len(theory.observables))))
    observations = []
    for port in ports:
        if rng.random() < 0.75:
            observations.append(Observation.abnormal_at(port, rng.randint(0, 40)))
        else:
            observations.append(Observation.normal_through(port, rng.randint(0, 40)))
    return observations
