"""
Abductive explanations for timestamped symptoms.

Observed ports are chained backwards through the causal theory into an engine network:
abnormal observations through covering rules, back-projecting their time windows
through term delays; normal observations through complement rules. Correlating several
observations is the conjunction of their explanation sets, with temporal intersection
removing combinations whose timings cannot all hold.
"""
import itertools
import logging
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable

import networkx as nx

from correlator.calculus import AssumptionKind, Calculus
from correlator.engine import Engine, Environment, Node
from correlator.model import ABNORMAL, parse_cause
from correlator.temporal import NEG_INF, POS_INF, ZERO_DELAY, Interval, TemporalConstraint, back_project
from correlator.theory import CausalTheory, LinkInfo, Term

logger = logging.getLogger(__name__)

ROOT_NODE = "<observations>"


class ObservationKind(Enum):
    FIRST_ABNORMAL = "first-abnormal"
    NORMAL_THROUGH = "normal-through"


@dataclass(frozen=True)
class Observation:
    port: str
    kind: ObservationKind
    time: int

    @property
    def sort_key(self) -> tuple:
        return self.port, self.kind.value, self.time

    @classmethod
    def abnormal_at(cls, port: str, time: int) -> "Observation":
        return cls(port, ObservationKind.FIRST_ABNORMAL, time)

    @classmethod
    def normal_through(cls, port: str, time: int) -> "Observation":
        return cls(port, ObservationKind.NORMAL_THROUGH, time)


@dataclass(frozen=True)
class CauseLiteral:
    variable: str
    mode: str
    constraint: TemporalConstraint


@dataclass(frozen=True)
class Explanation:
    causes: tuple[CauseLiteral, ...]
    normals: tuple[TemporalConstraint, ...]
    causation_events: frozenset[str]
    belief: float
    cost: float
    path_trace: frozenset[str]

    @property
    def assumptions(self) -> frozenset[str]:
        return frozenset(f"{c.variable}={c.mode}" for c in self.causes) | self.causation_events

    @property
    def intervals(self) -> dict[str, Interval]:
        return {c.variable: c.constraint.interval for c in self.causes}

    @property
    def sort_key(self) -> tuple:
        return (self.cost, tuple(sorted(self.assumptions)),
                tuple((c.variable, c.constraint.interval) for c in self.causes),
                tuple((n.variable, n.interval) for n in self.normals),
                tuple(sorted(self.path_trace)))


@dataclass(frozen=True)
class ExplanationSet:
    explanations: tuple[Explanation, ...]
    bound: float
    observations: tuple[Observation, ...]

    @property
    def horizon(self) -> int | float:
        """Latest abnormal time covered, or the latest observation time without any"""
        abnormal = [o.time for o in self.observations if o.kind is ObservationKind.FIRST_ABNORMAL]
        return max(abnormal or [o.time for o in self.observations] or [POS_INF])

    def __len__(self) -> int:
        return len(self.explanations)

    def __iter__(self):
        return iter(self.explanations)


class NetworkBuilder:
    """Backward chaining from observations into one private engine"""

    # Public attributes
    logger: logging.Logger
    theory: CausalTheory
    engine: Engine

    def __init__(self, theory: CausalTheory, calculus: Calculus, bound: float):
        self.logger = logging.getLogger(__name__)
        self.theory = theory
        self.engine = Engine(calculus, bound)
        for a, b in theory.disjoint:
            self.engine.declare_disjoint(a, b)

    def assumption(self, assumption_id: str) -> Node:
        if self.engine.has_assumption(assumption_id):
            return self.engine.node(assumption_id)
        a = self.theory.assumption(assumption_id)
        return self.engine.add_assumption(a.id, a.belief, a.kind)

    def observation(self, obs: Observation) -> Node:
        if obs.kind is ObservationKind.FIRST_ABNORMAL:
            return self.abnormal(obs.port, ABNORMAL, Interval.point(obs.time))
        return self.normal(obs.port, Interval.prefix(obs.time))

    """Node for: variable takes `mode` at some time within `window`"""
    def abnormal(self, variable: str, mode: str, window: Interval) -> Node:
        return self._build(_Request(True, variable, mode, window))

    """Node for: variable holds normal during the prefix interval"""
    def normal(self, variable: str, prefix: Interval) -> Node:
        return self._build(_Request(False, variable, None, prefix))

    def root(self, observations: Iterable[Observation]) -> Node:
        antecedents = [self.observation(o) for o in observations]
        node = self.engine.add_node(ROOT_NODE)
        self.engine.add_justification(node, antecedents, single_path=False)
        return node

    def _build(self, request: "_Request") -> Node:
        # Depth-first with an explicit stack, chains are as deep as the model
        stack = [request]
        while stack:
            current = stack[-1]
            if self.engine.has_node(current.name):
                stack.pop()
                continue
            plans = self._plan(current)
            missing = [r for plan in plans for r in plan[0] if not self.engine.has_node(r.name)]
            if missing:
                stack.extend(reversed(missing))
                continue
            stack.pop()
            self._add(current, plans)
        return self.engine.node(request.name)

    def _plan(self, request: "_Request") -> list[tuple[list["_Request"], Term]]:
        """Antecedent requests of every term that can produce the request"""
        if self.theory.is_state(request.variable):
            return []

        plans = []
        if request.abnormal:
            for term in self.theory.abnormal[request.variable].terms:
                source_window = back_project(request.interval, term.delay or ZERO_DELAY)
                antecedents = [_Request(True, v, m, source_window) for v, m in term.abnormal]
                # Units on the path must keep working until the effect can start
                if request.interval.lo != NEG_INF:
                    prefix = Interval.prefix(request.interval.lo)
                    antecedents += [_Request(False, v, None, prefix) for v in term.normal]
                plans.append((antecedents, term))
        else:
            # Negative literals of a complement read "at some time within" the same prefix
            window = Interval(NEG_INF, request.interval.hi, True, request.interval.hi_open)
            for term in self.theory.complement[request.variable].terms:
                antecedents = [_Request(False, v, None, request.interval) for v in term.normal] + \
                              [_Request(True, v, m, window) for v, m in term.abnormal]
                plans.append((antecedents, term))
        return plans

    def _add(self, request: "_Request", plans: list[tuple[list["_Request"], Term]]) -> Node:
        if self.theory.is_state(request.variable):
            if request.abnormal:
                cause = self.assumption(f"{request.variable}={request.mode}")
                node = self.engine.add_node(request.name)
                self.engine.add_justification(node, [cause],
                                              constraints=[TemporalConstraint.event(request.variable,
                                                                                    request.interval)])
            else:
                node = self.engine.add_node(request.name)
                self.engine.add_justification(node, [],
                                              constraints=[TemporalConstraint.holds(request.variable,
                                                                                    request.interval)])
            return node

        justifications = []
        for antecedents, term in plans:
            events = [self.assumption(e).name for e in term.events] + \
                     [self.assumption(f"~{e}").name for e in term.negated_events]
            justifications.append(([self.engine.node(r.name) for r in antecedents], events, term.path_id))

        # Windows are already back-projected into the antecedent requests, so no engine delay
        node = self.engine.add_node(request.name)
        for antecedents, events, path_id in justifications:
            self.engine.add_justification(node, antecedents, events, path_id=path_id)
        return node


@dataclass(frozen=True)
class _Request:
    """One node the builder needs: an abnormal window or a normal prefix of a variable"""
    abnormal: bool
    variable: str
    mode: str | None
    interval: Interval

    @property
    def name(self) -> str:
        if self.abnormal:
            return f"{self.variable}={self.mode}@{self.interval}"
        return f"{self.variable}:normal@{self.interval}"


def explain_symptom(theory: CausalTheory, obs: Observation, calculus: Calculus, bound: float) -> ExplanationSet:
    """Explanations of one observation; a one-element correlation"""
    return correlate(theory, [obs], calculus, bound)


def correlate(theory: CausalTheory, observations: Iterable[Observation], calculus: Calculus,
              bound: float) -> ExplanationSet:
    """Conjunction of the explanation sets of every observation"""
    observations = _check_observations(theory, observations)
    builder = NetworkBuilder(theory, calculus, bound)
    root = builder.root(observations)
    environments = builder.engine.query_label(root, bound)

    explanations = tuple(to_explanation(env, theory, calculus) for env in environments)
    logger.debug(f"Correlated {len(observations)} observations into {len(explanations)} explanations "
                 f"within bound {bound}")
    return ExplanationSet(explanations, bound, observations)


def _check_observations(theory: CausalTheory, observations: Iterable[Observation]) -> tuple[Observation, ...]:
    observations = tuple(sorted(set(observations), key=lambda o: o.sort_key))
    first_abnormal: dict[str, int] = {}
    for obs in observations:
        if obs.port not in theory.ports:
            raise ValueError(f"Unknown port '{obs.port}'")
        if obs.port not in theory.observables:
            raise ValueError(f"Port '{obs.port}' is not observable")
        if obs.kind is ObservationKind.FIRST_ABNORMAL:
            if obs.port in first_abnormal:
                raise ValueError(f"Port '{obs.port}' has two first-abnormal records, "
                                 f"at {first_abnormal[obs.port]} and {obs.time}")
            first_abnormal[obs.port] = obs.time
    for obs in observations:
        if obs.kind is ObservationKind.NORMAL_THROUGH and obs.time > first_abnormal.get(obs.port, POS_INF):
            raise ValueError(f"Port '{obs.port}' is reported normal through {obs.time}, "
                             f"after its first abnormal time {first_abnormal[obs.port]}")
    return observations


def to_explanation(env: Environment, theory: CausalTheory, calculus: Calculus) -> Explanation:
    exists = dict(env.exists)
    causes, events = [], set()
    for a in sorted(env.assumptions):
        if theory.assumption(a).kind is AssumptionKind.CAUSE:
            variable, mode = parse_cause(a)
            interval = exists.get(variable, Interval(NEG_INF, POS_INF))
            causes.append(CauseLiteral(variable, mode, TemporalConstraint.event(variable, interval)))
        else:
            events.add(a)
    return Explanation(
        causes=tuple(causes),
        normals=tuple(TemporalConstraint.holds(v, i) for v, i in env.during),
        causation_events=frozenset(events),
        belief=calculus.belief(theory.assumption(a) for a in env.assumptions),
        cost=env.cost,
        path_trace=env.path_trace,
    )


def expand_link_faults(eset: ExplanationSet, theory: CausalTheory, calculus: Calculus,
                       bound: float) -> ExplanationSet:
    """
    Add the multiple-fault explanations where a working link that transmitted (y and alpha)
    is replaced by the link having failed itself (~y). The original explanations are kept.
    """
    seen = {e.sort_key for e in eset.explanations}
    added = []

    for explanation in eset.explanations:
        required = {n.variable for n in explanation.normals}
        states_in_use = {c.variable for c in explanation.causes}
        candidates = [link for link in theory.links
                      if link.alpha in explanation.causation_events and link.state in required
                      and link.state not in states_in_use]

        for size in range(1, len(candidates) + 1):
            for chosen in itertools.combinations(candidates, size):
                windows = {link: fault_window(eset, explanation, link, theory) for link in chosen}
                substituted = _substitute(explanation, windows, theory, calculus)
                if substituted is None or substituted.cost > bound or substituted.sort_key in seen:
                    continue
                seen.add(substituted.sort_key)
                added.append(substituted)

    logger.debug(f"Link fault substitution added {len(added)} explanations")
    explanations = tuple(sorted(eset.explanations + tuple(added), key=lambda e: e.sort_key))
    return ExplanationSet(explanations, eset.bound, eset.observations)


def fault_window(eset: ExplanationSet, explanation: Explanation, link: LinkInfo, theory: CausalTheory) -> Interval:
    """
    Widest sound window for a substituted link fault, its own timing is not revised:
    up to the latest symptom whose explanation path runs through the link
    """
    times = [o.time for o in eset.observations if o.kind is ObservationKind.FIRST_ABNORMAL
             and _runs_through(explanation.path_trace, link.head, o.port, theory)]
    latest = max(times) if times else eset.horizon
    return Interval(NEG_INF, latest, True, latest == POS_INF)


def _runs_through(trace: frozenset[str], head: str, port: str, theory: CausalTheory) -> bool:
    """Some route from `head` to `port` uses, at every step, a term of the trace fed by the previous port"""
    if port == head:
        return True
    if port not in theory.ground.graph or head not in theory.ground.graph:
        return False
    for route in nx.all_simple_paths(theory.ground.graph, head, port):
        if all(any(t.path_id in trace and previous in t.variables for t in theory.abnormal[current].terms)
               for previous, current in zip(route, route[1:])):
            return True
    return False


def _substitute(explanation: Explanation, windows: dict[LinkInfo, Interval], theory: CausalTheory,
                calculus: Calculus) -> Explanation | None:
    states = {link.state for link in windows}
    events = explanation.causation_events - {link.alpha for link in windows}
    causes = list(explanation.causes)
    for link, window in windows.items():
        variable, mode = parse_cause(link.fault_cause)
        causes.append(CauseLiteral(variable, mode, TemporalConstraint.event(variable, window)))
    causes.sort(key=lambda c: (c.variable, c.mode))

    assumptions = [theory.assumption(f"{c.variable}={c.mode}") for c in causes] + \
                  [theory.assumption(e) for e in events]
    cost = calculus.cost(assumptions)
    if cost == POS_INF:
        return None
    return replace(
        explanation,
        causes=tuple(causes),
        normals=tuple(n for n in explanation.normals if n.variable not in states),
        causation_events=frozenset(events),
        belief=calculus.belief(assumptions),
        cost=cost,
    )


def rank(eset: ExplanationSet | Iterable[Explanation], calculus: Calculus,
         theory: CausalTheory | None = None) -> list[Explanation]:
    """Ascending cost, i.e. descending belief, ties broken on assumption ids"""
    explanations = list(eset)
    if theory is not None:
        # Re-evaluate under another calculus
        explanations = [_rescore(e, theory, calculus) for e in explanations]
    return sorted(explanations, key=lambda e: e.sort_key)


def _rescore(explanation: Explanation, theory: CausalTheory, calculus: Calculus) -> Explanation:
    assumptions = [theory.assumption(a) for a in explanation.assumptions]
    return replace(explanation, cost=calculus.cost(assumptions), belief=calculus.belief(assumptions))
