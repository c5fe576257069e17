"""
Compile a ground functional model into a covering causal theory.

Each port variable heads one abnormal rule, listing every way it can become abnormal
(terms carry delays), and one complement rule, listing every way it stays normal
(no delays). Only two unit templates exist, the uncertain link and the two-input join;
larger joins are cascades of join2.
"""
import itertools
import logging
from dataclasses import dataclass
from enum import Enum

from correlator.calculus import Assumption, AssumptionKind, Belief
from correlator.model import (ABNORMAL, GroundModel, Join2Spec, LinkSpec, cause_id, parse_cause,
                              qualify)
from correlator.temporal import ZERO_DELAY, Delay

logger = logging.getLogger(__name__)

NEGATION = "~"


class RuleKind(Enum):
    ABNORMAL = "abnormal-covering"
    COMPLEMENT = "normal-complement"
    EXOGENOUS = "exogenous-normal"


@dataclass(frozen=True)
class CausationEvent:
    id: str
    role: str
    belief: Belief
    owner: str
    disjoint_with: str | None = None


@dataclass(frozen=True)
class Term:
    """
    One conjunction of a rule body.
    `abnormal` holds (variable, mode) events: ports use mode 'abnormal', states a fault mode.
    """
    path_id: str
    abnormal: tuple[tuple[str, str], ...] = ()
    normal: tuple[str, ...] = ()
    events: tuple[str, ...] = ()
    negated_events: tuple[str, ...] = ()
    delay: Delay | None = None

    def __post_init__(self):
        variables = [v for v, _ in self.abnormal] + list(self.normal)
        if len(set(variables)) != len(variables):
            raise ValueError(f"Term {self.path_id} mentions a variable more than once")

    @property
    def variables(self) -> frozenset[str]:
        return frozenset([v for v, _ in self.abnormal] + list(self.normal))

    @property
    def all_events(self) -> frozenset[str]:
        return frozenset(self.events) | frozenset(self.negated_events)


@dataclass(frozen=True)
class Rule:
    head: str
    kind: RuleKind
    terms: tuple[Term, ...]

    @property
    def variables(self) -> frozenset[str]:
        return frozenset().union(*(t.variables for t in self.terms))

    @property
    def events(self) -> frozenset[str]:
        return frozenset().union(*(t.all_events for t in self.terms))


@dataclass(frozen=True)
class RulePair:
    abnormal: Rule
    complement: Rule
    events: tuple[CausationEvent, ...] = ()


@dataclass(frozen=True)
class LinkInfo:
    """What the link-fault substitution needs to know about one link"""
    head: str
    state: str
    fault_cause: str
    alpha: str


@dataclass(frozen=True)
class CausalTheory:
    ground: GroundModel
    causes: tuple[str, ...]
    events: dict[str, CausationEvent]
    abnormal: dict[str, Rule]
    complement: dict[str, Rule]
    links: tuple[LinkInfo, ...] = ()
    disjoint: tuple[tuple[str, str], ...] = ()
    states: frozenset[str] = frozenset()

    @property
    def ports(self) -> tuple[str, ...]:
        return self.ground.ports

    @property
    def observables(self) -> tuple[str, ...]:
        return self.ground.observables

    @property
    def assumptions(self) -> tuple[str, ...]:
        """Cause events together with causation events, both take part in explanations"""
        return tuple(sorted(self.causes)) + tuple(sorted(self.events))

    def is_state(self, variable: str) -> bool:
        return variable in self.states

    def belief(self, assumption_id: str) -> Belief:
        if assumption_id.startswith(NEGATION):
            return self.belief(assumption_id[len(NEGATION):]).negated()
        if assumption_id in self.events:
            return self.events[assumption_id].belief
        if assumption_id in self.ground.cause_beliefs:
            return self.ground.cause_beliefs[assumption_id]
        raise KeyError(f"Unknown assumption '{assumption_id}'")

    def assumption(self, assumption_id: str) -> Assumption:
        kind = AssumptionKind.CAUSE if assumption_id in self.ground.cause_beliefs else AssumptionKind.CAUSATION
        return Assumption(assumption_id, kind, self.belief(assumption_id))


def negate(event_id: str) -> str:
    return f"{NEGATION}{event_id}"


def link_template(input: str | None, cause: str, output: str, alpha: Belief | None,
                  fault_belief: Belief, delay_prop: Delay, delay_fault: Delay,
                  fault_mode: str = "failed") -> RulePair:
    """
    ~x & y & alpha | ~y  <->  ~z, with complement ~alpha & ~x & y | y & x  <->  z.
    Without an input the link is a source: ~y <-> ~z and y <-> z.
    """
    if delay_fault.d_min > 0:
        logger.warning(f"Link {output}: fault delay {delay_fault} has a non-zero minimum, "
                       f"the state only models the unit and usually acts at once")

    if input is None:
        abnormal = Rule(output, RuleKind.ABNORMAL,
                        (Term(f"{output}#1", abnormal=((cause, fault_mode),), delay=delay_fault),))
        complement = Rule(output, RuleKind.COMPLEMENT, (Term(f"{output}~1", normal=(cause,)),))
        return RulePair(abnormal, complement)

    if alpha is None:
        raise ValueError(f"Link {output} has an input and needs an alpha belief")
    alpha_event = CausationEvent(f"{output}.alpha", "alpha", alpha, output)

    if alpha.p is not None and fault_belief.p is not None and (1.0 - fault_belief.p) * alpha.p <= fault_belief.p:
        logger.warning(f"Link {output}: P[y & alpha] <= P[~y], substituted link faults will not rank below "
                       f"the explanations they come from")

    abnormal = Rule(output, RuleKind.ABNORMAL, (
        Term(f"{output}#1", abnormal=((input, ABNORMAL),), normal=(cause,), events=(alpha_event.id,),
             delay=delay_prop),
        Term(f"{output}#2", abnormal=((cause, fault_mode),), delay=delay_fault),
    ))
    complement = Rule(output, RuleKind.COMPLEMENT, (
        Term(f"{output}~1", abnormal=((input, ABNORMAL),), normal=(cause,), negated_events=(alpha_event.id,)),
        Term(f"{output}~2", normal=(cause, input)),
    ))
    return RulePair(abnormal, complement, (alpha_event,))


def join2_template(in1: str, in2: str, output: str, alpha: Belief, beta: Belief, psi: Belief, sigma: Belief,
                   delay1: Delay, delay2: Delay, delay_joint: Delay) -> RulePair:
    """
    (~x & alpha) | (~y & beta) | (~x & psi) & (~y & sigma)  <->  ~z
    with psi & alpha and sigma & beta impossible.
    """
    if in1 == in2:
        raise ValueError(f"Join {output} needs two different inputs, got {in1} twice")
    if delay1.d_min != 0 or delay2.d_min != 0:
        raise ValueError(f"Join {output}: single-input terms must have a zero minimum delay, "
                         f"got {delay1} and {delay2}")

    a, b = f"{output}.alpha", f"{output}.beta"
    p, s = f"{output}.psi", f"{output}.sigma"
    events = (
        CausationEvent(a, "alpha", alpha, output),
        CausationEvent(b, "beta", beta, output),
        CausationEvent(p, "psi", psi, output, disjoint_with=a),
        CausationEvent(s, "sigma", sigma, output, disjoint_with=b),
    )
    x, y = (in1, ABNORMAL), (in2, ABNORMAL)

    terms = [
        Term(f"{output}#1", abnormal=(x,), events=(a,), delay=delay1),
        Term(f"{output}#2", abnormal=(y,), events=(b,), delay=delay2),
    ]
    if psi.is_impossible or sigma.is_impossible:
        logger.info(f"Join {output}: joint context cannot hold, compiled as a two-term join")
    else:
        terms.append(Term(f"{output}#3", abnormal=(x, y), events=(p, s), delay=delay_joint))

    complement = Rule(output, RuleKind.COMPLEMENT, (
        Term(f"{output}~1", normal=(in1, in2)),
        Term(f"{output}~2", abnormal=(x,), normal=(in2,), negated_events=(a,)),
        Term(f"{output}~3", abnormal=(y,), normal=(in1,), negated_events=(b,)),
        Term(f"{output}~4", abnormal=(x, y), negated_events=(a, p, b)),
        Term(f"{output}~5", abnormal=(x, y), negated_events=(a, b, s)),
    ))
    return RulePair(Rule(output, RuleKind.ABNORMAL, tuple(terms)), complement, events)


def identity_pair(source: str, dest: str) -> RulePair:
    """A connection: the input port mirrors its upstream output"""
    return RulePair(
        Rule(dest, RuleKind.ABNORMAL, (Term(f"{dest}#1", abnormal=((source, ABNORMAL),), delay=ZERO_DELAY),)),
        Rule(dest, RuleKind.COMPLEMENT, (Term(f"{dest}~1", normal=(source,)),)),
    )


def exogenous_pair(port: str) -> RulePair:
    """Unconnected inputs stay normal for all time"""
    return RulePair(
        Rule(port, RuleKind.EXOGENOUS, ()),
        Rule(port, RuleKind.COMPLEMENT, (Term(f"{port}~1"),)),
    )


def compile_theory(gm: GroundModel) -> CausalTheory:
    """Instantiate unit templates per instance and close the theory over connections"""
    model = gm.model
    pairs: dict[str, RulePair] = {}
    links: list[LinkInfo] = []

    def add(pair: RulePair):
        head = pair.abnormal.head
        if head in pairs:
            raise ValueError(f"Port {head} is defined more than once")
        pairs[head] = pair

    for inst in model.instances:
        unit = model.unit(inst.unit)
        for spec in unit.behaviours:
            output = qualify(inst.name, spec.out)
            if isinstance(spec, LinkSpec):
                state = unit.state(spec.cause)
                fault_mode = state.fault_modes[0]
                state_var = qualify(inst.name, spec.cause)
                pair = link_template(
                    input=None if spec.input is None else qualify(inst.name, spec.input),
                    cause=state_var,
                    output=output,
                    alpha=spec.alpha,
                    fault_belief=state.belief,
                    delay_prop=spec.delay,
                    delay_fault=spec.fault_delay,
                    fault_mode=fault_mode,
                )
                if spec.input is not None:
                    links.append(LinkInfo(output, state_var, cause_id(state_var, fault_mode), pair.events[0].id))
            elif isinstance(spec, Join2Spec):
                pair = join2_template(
                    qualify(inst.name, spec.in1), qualify(inst.name, spec.in2), output,
                    spec.alpha, spec.beta, spec.psi, spec.sigma,
                    spec.delay1, spec.delay2, spec.delay_joint,
                )
            else:
                raise ValueError(f"Unknown behaviour template {type(spec).__name__}")
            add(pair)

    connected = {dst: src for src, dst in ((c.source, c.dest) for c in model.connections)}
    for inst in model.instances:
        unit = model.unit(inst.unit)
        for port in unit.in_ports:
            name = qualify(inst.name, port.name)
            add(identity_pair(connected[name], name) if name in connected else exogenous_pair(name))

    # Covering: one abnormal and one complement rule per port
    missing = sorted(set(gm.ports) - set(pairs))
    if missing:
        raise ValueError(f"Ports {missing} have no defining template and are not exogenous inputs")

    _check_antecedents(gm, pairs)

    events = {e.id: e for pair in pairs.values() for e in pair.events}
    theory = CausalTheory(
        ground=gm,
        causes=gm.causes,
        events=dict(sorted(events.items())),
        abnormal={head: pairs[head].abnormal for head in sorted(pairs)},
        complement={head: pairs[head].complement for head in sorted(pairs)},
        links=tuple(sorted(links, key=lambda link: link.head)),
        disjoint=_disjoint_pairs(gm, events),
        states=frozenset(gm.states),
    )
    logger.debug(f"Compiled theory: {len(theory.abnormal)} rule pairs, {len(theory.causes)} causes, "
                 f"{len(theory.events)} causation events")
    return theory


def _check_antecedents(gm: GroundModel, pairs: dict[str, RulePair]):
    states = {parse_cause(c)[0] for c in gm.causes}
    for head, pair in pairs.items():
        ancestors = gm.ancestors(head)
        for variable in pair.abnormal.variables | pair.complement.variables:
            if variable not in states and variable not in ancestors:
                raise ValueError(f"Rule for {head} mentions {variable}, which is not upstream of it")
        # Dropped joint terms only remove events from the abnormal side
        if not pair.abnormal.events <= pair.complement.events:
            raise ValueError(f"Rule pair for {head} mentions different causation events")


def _disjoint_pairs(gm: GroundModel, events: dict[str, CausationEvent]) -> tuple[tuple[str, str], ...]:
    pairs = set()
    for event in events.values():
        pairs.add((event.id, negate(event.id)))
        if event.disjoint_with is not None:
            pairs.add(tuple(sorted((event.id, event.disjoint_with))))

    # A state changes at most once, so two fault modes never co-occur
    by_state: dict[str, list[str]] = {}
    for cause in gm.causes:
        by_state.setdefault(parse_cause(cause)[0], []).append(cause)
    for causes in by_state.values():
        pairs.update(itertools.combinations(sorted(causes), 2))
    return tuple(sorted(pairs))
