"""
Brute-force reference for small models.

Enumerates every set of faulty causes. Under each set, the covering and complement rules are
evaluated forward from the states to the observed ports, carrying the accumulated delay
from every fault to the port it reaches. Observations turn those delays into time windows,
and the combinations whose windows intersect and whose assumptions are compatible
are the candidates; the minimal ones are kept. Only the interval algebra is shared with
the backward-chaining explainer.
"""
import itertools
import logging
import math
from dataclasses import dataclass
from typing import Iterable, Iterator

from correlator.calculus import Calculus
from correlator.explain import Observation, ObservationKind
from correlator.model import ABNORMAL, parse_cause
from correlator.temporal import (NEG_INF, ZERO_DELAY, Delay, Interval, back_project, intersect_exists, merge_during,
                                 refine_exists_against_during)
from correlator.theory import CausalTheory, Term, negate

logger = logging.getLogger(__name__)

# Some constants
MAX_CAUSES = 20
MAX_SUBSET_UNIVERSE = 20
MAX_DERIVATIONS = 200_000


def _chain(first: Delay, then: Delay) -> Delay:
    return Delay(first.d_min + then.d_min, first.d_max + then.d_max)


@dataclass(frozen=True)
class Arrival:
    """
    One way a port becomes abnormal under a fault set.
    `offsets` holds the delay from each faulty state's change to the port, `holding` the states
    that must stay working until the port's window start minus the given slack.
    """
    assumptions: frozenset[str]
    trace: frozenset[str]
    offsets: tuple[tuple[str, Delay], ...] = ()
    holding: tuple[tuple[str, int | float], ...] = ()

    def later(self, delay: Delay) -> "Arrival":
        return Arrival(self.assumptions, self.trace,
                       tuple((s, _chain(d, delay)) for s, d in self.offsets),
                       tuple((s, slack + delay.d_max) for s, slack in self.holding))

    def at(self, window: Interval) -> tuple[list, list]:
        exists = [(s, back_project(window, d)) for s, d in self.offsets]
        during = [(s, Interval.prefix(window.lo - slack)) for s, slack in self.holding
                  if window.lo - slack != NEG_INF]
        return exists, during


@dataclass(frozen=True)
class Holding:
    """One way a port stays normal: working states plus upstream ports abnormal without effect"""
    assumptions: frozenset[str]
    trace: frozenset[str]
    states: frozenset[str] = frozenset()
    arrivals: tuple[Arrival, ...] = ()

    def at(self, prefix: Interval) -> tuple[list, list]:
        exists, during = [], [(s, prefix) for s in sorted(self.states)]
        window = Interval(NEG_INF, prefix.hi, True, prefix.hi_open)
        for arrival in self.arrivals:
            e, d = arrival.at(window)
            exists += e
            during += d
        return exists, during


@dataclass(frozen=True)
class Derivation:
    """An observation's derivation with concrete time windows"""
    assumptions: frozenset[str] = frozenset()
    exists: tuple[tuple[str, Interval], ...] = ()
    during: tuple[tuple[str, Interval], ...] = ()
    trace: frozenset[str] = frozenset()

    def __add__(self, other: "Derivation") -> "Derivation":
        return Derivation(self.assumptions | other.assumptions, self.exists + other.exists,
                          self.during + other.during, self.trace | other.trace)


@dataclass(frozen=True)
class Support:
    assumptions: frozenset[str]
    exists: tuple[tuple[str, Interval], ...]
    during: tuple[tuple[str, Interval], ...]
    cost: float
    belief: float
    trace: frozenset[str]

    @property
    def key(self) -> tuple:
        return tuple(sorted(self.assumptions)), self.exists, self.during, tuple(sorted(self.trace))

    def covers(self, other: "Support") -> bool:
        """self is at least as general as other"""
        if not (self.assumptions <= other.assumptions and self.trace <= other.trace):
            return False
        theirs = dict(other.exists)
        if any(v not in theirs or not i.covers(theirs[v]) for v, i in self.exists):
            return False
        theirs = dict(other.during)
        return all(v in theirs and theirs[v].covers(i) for v, i in self.during)


@dataclass
class Evaluation:
    """Forward evaluation of the rules under one fault set"""
    faults: frozenset[str]
    arrivals: dict[tuple[str, str], list[Arrival]]
    holdings: dict[str, list[Holding]]


class Oracle:
    # Public attributes
    logger: logging.Logger
    theory: CausalTheory

    # Private attributes
    _disjoint: set[frozenset[str]]

    def __init__(self, theory: CausalTheory):
        self.logger = logging.getLogger(__name__)
        self.theory = theory
        self._disjoint = {frozenset(pair) for pair in theory.disjoint}

    def fault_sets(self) -> Iterator[frozenset[str]]:
        """Every set of causes that can fail together, smallest first"""
        causes = self.theory.causes
        if len(causes) > MAX_CAUSES:
            raise ValueError(f"{len(causes)} causes, model too large for the oracle (at most {MAX_CAUSES})")
        for size in range(len(causes) + 1):
            for combo in itertools.combinations(causes, size):
                if not any(frozenset(pair) in self._disjoint for pair in itertools.combinations(combo, 2)):
                    yield frozenset(combo)

    def evaluate(self, faults: frozenset[str], ports: Iterable[str]) -> Evaluation:
        """Arrivals and holdings of `ports` and everything upstream, with only `faults` available"""
        wanted = set(ports)
        for port in list(wanted):
            wanted |= self.theory.ground.ancestors(port)

        result = Evaluation(faults, {}, {})
        for cause in faults:
            state, mode = parse_cause(cause)
            result.arrivals[(state, mode)] = [Arrival(frozenset([cause]), frozenset(), ((state, ZERO_DELAY),))]
        for state in self.theory.states:
            result.holdings[state] = [Holding(frozenset(), frozenset(), frozenset([state]))]

        for port in (p for p in self.theory.ground.order if p in wanted):
            result.arrivals[(port, ABNORMAL)] = [
                a for term in self.theory.abnormal[port].terms for a in self._arrivals(term, result)]
            result.holdings[port] = [
                h for term in self.theory.complement[port].terms for h in self._holdings(term, result)]
        return result

    def _arrivals(self, term: Term, result: Evaluation) -> list[Arrival]:
        causes = [result.arrivals.get(literal, []) for literal in term.abnormal]
        _check_size(causes)
        own = _own_assumptions(term)
        delay = term.delay or ZERO_DELAY
        found = []
        for combo in itertools.product(*causes):
            trace = frozenset([term.path_id]).union(*(a.trace for a in combo))
            if not _single_path(trace):
                continue
            lifted = [a.later(delay) for a in combo]
            found.append(Arrival(
                own.union(*(a.assumptions for a in combo)),
                trace,
                tuple(itertools.chain.from_iterable(a.offsets for a in lifted)),
                tuple(itertools.chain.from_iterable(a.holding for a in lifted)) + tuple((v, 0) for v in term.normal),
            ))
        return found

    def _holdings(self, term: Term, result: Evaluation) -> list[Holding]:
        normal = [result.holdings.get(v, []) for v in term.normal]
        abnormal = [result.arrivals.get(literal, []) for literal in term.abnormal]
        _check_size(normal + abnormal)
        own = _own_assumptions(term)
        found = []
        for held in itertools.product(*normal):
            for arrived in itertools.product(*abnormal):
                parts = held + arrived
                trace = frozenset([term.path_id]).union(*(p.trace for p in parts))
                if not _single_path(trace):
                    continue
                found.append(Holding(
                    own.union(*(p.assumptions for p in parts)),
                    trace,
                    frozenset().union(*(h.states for h in held)),
                    tuple(itertools.chain.from_iterable(h.arrivals for h in held)) + arrived,
                ))
        return found

    def derivations(self, obs: Observation, result: Evaluation) -> list[Derivation]:
        """Every derivation of one observation under an evaluated fault set, consistency unchecked"""
        if obs.kind is ObservationKind.FIRST_ABNORMAL:
            window, ways = Interval.point(obs.time), result.arrivals.get((obs.port, ABNORMAL), [])
        else:
            window, ways = Interval.prefix(obs.time), result.holdings.get(obs.port, [])
        found = []
        for way in ways:
            exists, during = way.at(window)
            found.append(Derivation(way.assumptions, tuple(exists), tuple(during), way.trace))
        return found

    def consistent(self, d: Derivation, calculus: Calculus) -> Support | None:
        for a, b in itertools.combinations(sorted(d.assumptions), 2):
            if frozenset((a, b)) in self._disjoint:
                return None

        exists: dict[str, Interval] = {}
        for variable, interval in d.exists:
            narrowed = intersect_exists(exists.get(variable, interval), interval)
            if narrowed is None:
                return None
            exists[variable] = narrowed
        during: dict[str, Interval] = {}
        for variable, interval in d.during:
            during[variable] = merge_during(during[variable], interval) if variable in during else interval
        for variable in exists.keys() & during.keys():
            exists[variable] = refine_exists_against_during(exists[variable], during[variable])
            if exists[variable] is None:
                return None

        assumptions = [self.theory.assumption(a) for a in d.assumptions]
        cost = calculus.cost(assumptions)
        if math.isinf(cost):
            return None
        return Support(d.assumptions, tuple(sorted(exists.items())), tuple(sorted(during.items())), cost,
                       calculus.belief(assumptions), d.trace)

    def candidates(self, faults: frozenset[str], observations: list[Observation],
                   calculus: Calculus) -> Iterator[Support]:
        """Consistent supports of all observations that use only `faults`"""
        result = self.evaluate(faults, (o.port for o in observations))
        per_observation = [self.derivations(o, result) for o in observations]
        _check_size(per_observation)
        for combo in itertools.product(*per_observation):
            support = self.consistent(sum(combo, Derivation()), calculus)
            if support is not None:
                yield support

    def explanations(self, observations: Iterable[Observation], calculus: Calculus,
                     bound: float = math.inf) -> list[Support]:
        observations = sorted(set(observations), key=lambda o: o.sort_key)
        causes = frozenset(self.theory.causes)

        found: dict[tuple, Support] = {}
        for faults in self.fault_sets():
            for support in self.candidates(faults, observations, calculus):
                # Each support is counted under exactly the faults it uses
                if support.assumptions & causes == faults and support.cost <= bound:
                    found.setdefault(support.key, support)

        unique = list(found.values())
        minimal = [s for s in unique if not any(o is not s and o.covers(s) for o in unique)]
        self.logger.debug(f"Oracle: {len(unique)} consistent candidates, {len(minimal)} minimal")
        return sorted(minimal, key=lambda s: (s.cost,) + s.key)

    def supports(self, assumptions: Iterable[str], observations: Iterable[Observation], calculus: Calculus) -> bool:
        """Whether the assumptions alone, with some timing, explain every observation"""
        allowed = frozenset(assumptions)
        observations = sorted(set(observations), key=lambda o: o.sort_key)
        faults = allowed & frozenset(self.theory.causes)
        return any(s.assumptions <= allowed for s in self.candidates(faults, observations, calculus))

    def minimal_assumption_sets(self, observations: Iterable[Observation], calculus: Calculus,
                                bound: float = math.inf) -> list[frozenset[str]]:
        """Subset-minimal assumption sets within the bound, by exhaustive search over subsets"""
        observations = sorted(set(observations), key=lambda o: o.sort_key)
        everything = self.evaluate(frozenset(self.theory.causes), (o.port for o in observations))
        universe = sorted(frozenset().union(*(d.assumptions for o in observations
                                               for d in self.derivations(o, everything))))
        if len(universe) > MAX_SUBSET_UNIVERSE:
            raise ValueError(f"{len(universe)} relevant assumptions, the subset search is limited to "
                             f"{MAX_SUBSET_UNIVERSE}")

        found: list[frozenset[str]] = []
        for size in range(len(universe) + 1):
            for subset in map(frozenset, itertools.combinations(universe, size)):
                if any(f <= subset for f in found):
                    continue
                if calculus.cost(self.theory.assumption(a) for a in subset) > bound:
                    continue
                if self.supports(subset, observations, calculus):
                    found.append(subset)
        return sorted(found, key=lambda s: (len(s), sorted(s)))


def _own_assumptions(term: Term) -> frozenset[str]:
    return frozenset(term.events) | {negate(e) for e in term.negated_events}


def _check_size(choices: list[list]):
    if math.prod(len(c) for c in choices) > MAX_DERIVATIONS:
        raise ValueError(f"More than {MAX_DERIVATIONS} derivations, the model is too large for the oracle")


def _single_path(trace: frozenset[str]) -> bool:
    groups = [p[:max(p.rfind("#"), p.rfind("~")) + 1] for p in trace]
    return len(groups) == len(set(groups))


def oracle_explanations(theory: CausalTheory, observations: Iterable[Observation], calculus: Calculus,
                        bound: float = math.inf) -> list[Support]:
    return Oracle(theory).explanations(observations, calculus, bound)


def supports(theory: CausalTheory, assumptions: Iterable[str], observations: Iterable[Observation],
             calculus: Calculus) -> bool:
    return Oracle(theory).supports(assumptions, observations, calculus)
