"""
Forward fault simulation over a compiled theory, used to produce observation logs.
Causation events and term delays are drawn once per run from a seeded generator.
"""
import logging
import random
from dataclasses import dataclass, field

from correlator.explain import Observation
from correlator.model import parse_cause
from correlator.temporal import POS_INF, Delay
from correlator.theory import CausalTheory, Term

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Injection:
    """A cause event: the state takes `mode` just after `time`"""
    cause: str
    time: int

    @property
    def state(self) -> str:
        return parse_cause(self.cause)[0]

    @property
    def mode(self) -> str:
        return parse_cause(self.cause)[1]

    @classmethod
    def parse(cls, text: str) -> "Injection":
        """`inst.state=mode@time`"""
        cause, sep, time = text.rpartition("@")
        if not sep or not cause:
            raise ValueError(f"Injection '{text}' is not of the form instance.state=mode@time")
        try:
            return cls(cause, int(time))
        except ValueError:
            raise ValueError(f"Injection '{text}' has a non-integer time '{time}'")


@dataclass(frozen=True)
class ObservationLog:
    records: tuple[Observation, ...]
    horizon: int
    seed: int | None = None
    injections: tuple[Injection, ...] = ()
    # Onset of every port that became abnormal, including unobserved ones
    port_times: dict[str, int] = field(default_factory=dict, compare=False)


class Simulator:
    # Public attributes
    logger: logging.Logger
    theory: CausalTheory
    seed: int | None

    # Private attributes
    _rng: random.Random
    _events: dict[str, bool]

    def __init__(self, theory: CausalTheory, seed: int | None = None):
        self.logger = logging.getLogger(__name__)
        self.theory = theory
        self.seed = seed
        self._rng = random.Random(seed)
        self._events = {}

    def run(self, injections: list[Injection], horizon: int, report_normals: bool = False) -> ObservationLog:
        fault_times = self._fault_times(injections)
        self._check_delays()
        self._events = self._sample_events()

        port_times: dict[str, int] = {}
        for port in self.theory.ground.order:
            onset = None
            for term in self.theory.abnormal[port].terms:
                t = self._term_time(term, fault_times, port_times)
                if t is not None and (onset is None or t < onset):
                    onset = t
            if onset is not None:
                port_times[port] = onset

        records = [Observation.abnormal_at(p, port_times[p]) for p in self.theory.observables
                   if p in port_times and port_times[p] <= horizon]
        if report_normals:
            records += [Observation.normal_through(p, horizon) for p in self.theory.observables
                        if port_times.get(p, POS_INF) > horizon]
        records.sort(key=lambda o: o.sort_key)

        self.logger.debug(f"Simulated {len(injections)} injections to horizon {horizon}: "
                          f"{len(port_times)} abnormal ports, {len(records)} records")
        return ObservationLog(tuple(records), horizon, self.seed, tuple(injections), port_times)

    def _fault_times(self, injections: list[Injection]) -> dict[str, tuple[str, int]]:
        fault_times = {}
        for injection in injections:
            if injection.cause not in self.theory.ground.cause_beliefs:
                raise KeyError(f"Unknown cause '{injection.cause}'")
            if injection.state in fault_times:
                raise ValueError(f"State {injection.state} is injected twice, it changes at most once")
            fault_times[injection.state] = (injection.mode, injection.time)
        return fault_times

    def _check_delays(self):
        for rule in self.theory.abnormal.values():
            for term in rule.terms:
                if term.delay is not None and term.delay.d_max == POS_INF:
                    raise ValueError(f"Cannot simulate the unbounded delay {term.delay} of {term.path_id}")

    def _sample_events(self) -> dict[str, bool]:
        events = {}
        for event_id, event in self.theory.events.items():
            # A joint context excludes its single-input partner
            if event.disjoint_with is not None and events.get(event.disjoint_with):
                events[event_id] = False
                continue
            p = event.belief.p if event.belief.p is not None else event.belief.n
            events[event_id] = self._rng.random() < p
        return events

    def _sample_delay(self, delay: Delay | None) -> int:
        if delay is None:
            return 0
        return self._rng.randint(delay.d_min, int(delay.d_max))

    def _term_time(self, term: Term, fault_times: dict[str, tuple[str, int]],
                   port_times: dict[str, int]) -> int | None:
        """Effect time of one term in this run, None when the term does not fire"""
        if not all(self._events[e] for e in term.events) or any(self._events[e] for e in term.negated_events):
            return None
        # Drawn for every term whose events fired, before any literal check
        delay = self._sample_delay(term.delay)

        times = []
        for variable, mode in term.abnormal:
            if self.theory.is_state(variable):
                fault = fault_times.get(variable)
                if fault is None or fault[0] != mode:
                    return None
                times.append(fault[1])
            else:
                if variable not in port_times:
                    return None
                times.append(port_times[variable])
        if not times:
            return None
        effect = max(times) + delay
        # Joint terms need every onset inside the delay window of the effect
        if term.delay is not None and min(times) < effect - term.delay.d_max:
            return None

        # Normal literals must hold up to the effect
        for variable in term.normal:
            changed = fault_times[variable][1] if variable in fault_times else port_times.get(variable)
            if changed is not None and changed < effect:
                return None
        return effect


def simulate(theory: CausalTheory, injections: list[Injection], seed: int | None = None,
             horizon: int = 1000, report_normals: bool = False) -> ObservationLog:
    return Simulator(theory, seed).run(injections, horizon, report_normals)
