"""
Functional models: units with ports and state variables, wired port to port.
"""
import logging
import re
from dataclasses import dataclass, field
from enum import Enum

import networkx as nx

from correlator.calculus import Belief
from correlator.temporal import ZERO_DELAY, Delay

logger = logging.getLogger(__name__)

# Some constants
WORKING = "working"
NORMAL = "normal"
ABNORMAL = "abnormal"
BINARY_DOMAIN: tuple[str, str] = (NORMAL, ABNORMAL)
IDENTIFIER = re.compile(r"^\w+$", re.ASCII)


class Severity(Enum):
    ERROR = "error"
    WARNING = "warning"


@dataclass(frozen=True, order=True)
class Issue:
    line: int
    location: str
    message: str
    severity: Severity = field(default=Severity.ERROR, compare=False)

    def as_dict(self) -> dict:
        return {"line": self.line, "location": self.location, "message": self.message,
                "severity": self.severity.value}


@dataclass
class ValidationReport:
    issues: list[Issue] = field(default_factory=list)

    def error(self, line: int, location: str, message: str):
        self.issues.append(Issue(line, location, message, Severity.ERROR))

    def warning(self, line: int, location: str, message: str):
        self.issues.append(Issue(line, location, message, Severity.WARNING))

    @property
    def errors(self) -> list[Issue]:
        return [i for i in self.issues if i.severity is Severity.ERROR]

    @property
    def warnings(self) -> list[Issue]:
        return [i for i in self.issues if i.severity is Severity.WARNING]

    @property
    def ok(self) -> bool:
        return not self.errors

    def sorted(self) -> "ValidationReport":
        return ValidationReport(sorted(self.issues))


@dataclass(frozen=True)
class StateVarDef:
    name: str
    fault_modes: tuple[str, ...]
    belief: Belief = Belief()
    environmental: bool = False
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class PortDef:
    name: str
    domain: tuple[str, ...] = BINARY_DOMAIN
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class LinkSpec:
    """Uncertain link; without an input port it is a source driven only by its cause"""
    out: str
    cause: str
    input: str | None = None
    alpha: Belief | None = None
    delay: Delay = ZERO_DELAY
    fault_delay: Delay = ZERO_DELAY
    line: int = field(default=0, compare=False)

    @property
    def inputs(self) -> tuple[str, ...]:
        return () if self.input is None else (self.input,)


@dataclass(frozen=True)
class Join2Spec:
    in1: str
    in2: str
    out: str
    alpha: Belief
    beta: Belief
    psi: Belief
    sigma: Belief
    delay1: Delay = ZERO_DELAY
    delay2: Delay = ZERO_DELAY
    delay_joint: Delay = ZERO_DELAY
    line: int = field(default=0, compare=False)

    @property
    def inputs(self) -> tuple[str, ...]:
        return self.in1, self.in2


TemplateSpec = LinkSpec | Join2Spec


@dataclass(frozen=True)
class UnitDef:
    name: str
    states: tuple[StateVarDef, ...] = ()
    in_ports: tuple[PortDef, ...] = ()
    out_ports: tuple[PortDef, ...] = ()
    behaviours: tuple[TemplateSpec, ...] = ()
    line: int = field(default=0, compare=False)

    def port(self, name: str) -> PortDef | None:
        return next((p for p in self.in_ports + self.out_ports if p.name == name), None)

    def state(self, name: str) -> StateVarDef | None:
        return next((s for s in self.states if s.name == name), None)


@dataclass(frozen=True)
class InstanceDef:
    name: str
    unit: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Connection:
    source: str
    dest: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class Observable:
    port: str
    line: int = field(default=0, compare=False)


@dataclass(frozen=True)
class ModelDef:
    name: str
    time_unit: str = "ticks"
    units: tuple[UnitDef, ...] = ()
    instances: tuple[InstanceDef, ...] = ()
    connections: tuple[Connection, ...] = ()
    observables: tuple[Observable, ...] = ()

    def unit(self, name: str) -> UnitDef | None:
        return next((u for u in self.units if u.name == name), None)

    def unit_of(self, instance: str) -> UnitDef | None:
        inst = next((i for i in self.instances if i.name == instance), None)
        return None if inst is None else self.unit(inst.unit)


@dataclass(frozen=True)
class GroundModel:
    model: ModelDef
    causes: tuple[str, ...]
    ports: tuple[str, ...]
    observables: tuple[str, ...]
    graph: nx.DiGraph = field(compare=False)
    order: tuple[str, ...]
    cause_beliefs: dict[str, Belief]
    environmental: frozenset[str]

    @property
    def states(self) -> tuple[str, ...]:
        return tuple(sorted({parse_cause(c)[0] for c in self.causes}))

    @property
    def edges(self) -> tuple[tuple[str, str], ...]:
        return tuple(sorted(self.graph.edges))

    def upstream(self, port: str) -> tuple[str, ...]:
        return tuple(sorted(self.graph.predecessors(port)))

    def ancestors(self, port: str) -> frozenset[str]:
        return frozenset(nx.ancestors(self.graph, port))


def qualify(instance: str, local: str) -> str:
    return f"{instance}.{local}"


def split_name(name: str) -> tuple[str, str]:
    """Split `instance.local` into its two parts"""
    instance, sep, local = name.partition(".")
    if not sep or not IDENTIFIER.match(instance) or not IDENTIFIER.match(local):
        raise ValueError(f"'{name}' is not a qualified name of the form instance.name")
    return instance, local


def cause_id(state_var: str, mode: str) -> str:
    return f"{state_var}={mode}"


def parse_cause(cause: str) -> tuple[str, str]:
    """`inst.state=mode` -> (`inst.state`, `mode`)"""
    state_var, sep, mode = cause.partition("=")
    if not sep:
        raise ValueError(f"'{cause}' is not a cause event of the form instance.state=mode")
    split_name(state_var)
    return state_var, mode


def validate(model_def: ModelDef) -> ValidationReport:
    """Check every structural rule of a functional model; problems are returned, not raised"""
    report = ValidationReport()

    _check_unique(report, [(u.name, u.line) for u in model_def.units], "unit")
    _check_unique(report, [(i.name, i.line) for i in model_def.instances], "instance")
    for unit in model_def.units:
        _validate_unit(report, unit)

    for inst in model_def.instances:
        if model_def.unit(inst.unit) is None:
            report.error(inst.line, f"instance {inst.name}", f"references undefined unit '{inst.unit}'")

    _validate_connections(report, model_def)

    for obs in model_def.observables:
        port = _resolve_port(model_def, obs.port)
        if port is None:
            report.error(obs.line, f"observe {obs.port}", "observable does not name an existing port")

    if report.ok:
        graph = dependency_graph(model_def)
        if not nx.is_directed_acyclic_graph(graph):
            cycle = nx.find_cycle(graph)
            report.error(0, "model", f"cyclic functional model through {sorted({src for src, _ in cycle})}")

    return report.sorted()


def _check_unique(report: ValidationReport, names: list[tuple[str, int]], what: str):
    seen = set()
    for name, line in names:
        if not IDENTIFIER.match(name):
            report.error(line, f"{what} {name}", "identifiers must be ASCII word characters")
        if name in seen:
            report.error(line, f"{what} {name}", f"duplicate {what} name")
        seen.add(name)


def _validate_unit(report: ValidationReport, unit: UnitDef):
    where = f"unit {unit.name}"
    _check_unique(report, [(p.name, p.line) for p in unit.in_ports + unit.out_ports]
                  + [(s.name, s.line) for s in unit.states], f"{where} port/state")

    for port in unit.in_ports + unit.out_ports:
        if tuple(sorted(port.domain)) != tuple(sorted(BINARY_DOMAIN)):
            report.error(port.line, f"{where} port {port.name}",
                         f"domain {list(port.domain)} not supported, binary abstraction only")

    for state in unit.states:
        loc = f"{where} state {state.name}"
        if not state.fault_modes:
            report.error(state.line, loc, "state needs at least one fault mode")
        if len(set(state.fault_modes)) != len(state.fault_modes):
            report.error(state.line, loc, "duplicate fault mode")
        if WORKING in state.fault_modes:
            report.error(state.line, loc, f"'{WORKING}' is implicit and cannot be a fault mode")
        if state.belief.p is None and state.belief.n is None:
            report.error(state.line, loc, "fault modes need a prior or a necessity")
        if state.belief.is_impossible:
            report.error(state.line, loc, "fault mode beliefs must be strictly positive")

    ins = {p.name for p in unit.in_ports}
    outs = {p.name for p in unit.out_ports}
    states = {s.name for s in unit.states}
    driven: dict[str, int] = {}
    for spec in unit.behaviours:
        loc = f"{where} line {spec.line}"
        for name in spec.inputs:
            if name not in ins:
                report.error(spec.line, loc, f"'{name}' is not an input port of {unit.name}")
        if spec.out not in outs:
            report.error(spec.line, loc, f"'{spec.out}' is not an output port of {unit.name}")
        elif spec.out in driven:
            report.error(spec.line, loc, f"output port '{spec.out}' driven by more than one behaviour")
        driven[spec.out] = spec.line

        if isinstance(spec, LinkSpec):
            if spec.cause not in states:
                report.error(spec.line, loc, f"'{spec.cause}' is not a state of {unit.name}")
            if spec.input is not None and spec.alpha is None:
                report.error(spec.line, loc, "link with an input needs an alpha belief")
            if spec.fault_delay.d_min > 0:
                report.warning(spec.line, loc, "fault delay minimum is usually 0, the state only models the unit")
        else:
            if spec.in1 == spec.in2:
                report.error(spec.line, loc, "join2 inputs must differ")
            if spec.delay1.d_min != 0 or spec.delay2.d_min != 0:
                report.error(spec.line, loc, "minimum delay of single-input join terms must be 0")
            for role in ("alpha", "beta"):
                if getattr(spec, role).is_impossible:
                    report.error(spec.line, loc, f"{role} must have a strictly positive belief")

    for port in unit.out_ports:
        if port.name not in driven:
            report.error(port.line, f"{where} port {port.name}", "output port has no defining behaviour")


def _resolve_port(model_def: ModelDef, name: str) -> tuple[UnitDef, PortDef, bool] | None:
    try:
        instance, local = split_name(name)
    except ValueError:
        return None
    unit = model_def.unit_of(instance)
    if unit is None:
        return None
    for port in unit.in_ports:
        if port.name == local:
            return unit, port, True
    for port in unit.out_ports:
        if port.name == local:
            return unit, port, False
    return None


def _validate_connections(report: ValidationReport, model_def: ModelDef):
    upstream: dict[str, Connection] = {}
    for conn in model_def.connections:
        loc = f"connect {conn.source} -> {conn.dest}"
        src = _resolve_port(model_def, conn.source)
        dst = _resolve_port(model_def, conn.dest)
        if src is None or src[2]:
            report.error(conn.line, loc, f"'{conn.source}' is not an output port")
        if dst is None or not dst[2]:
            report.error(conn.line, loc, f"'{conn.dest}' is not an input port")
        if src is not None and dst is not None and src[1].domain != dst[1].domain:
            report.error(conn.line, loc, "domain mismatch between connected ports")
        if conn.dest in upstream:
            report.error(conn.line, loc, f"fan-in at input port {conn.dest}, already fed by "
                                         f"{upstream[conn.dest].source}")
        else:
            upstream[conn.dest] = conn


def dependency_graph(model_def: ModelDef) -> nx.DiGraph:
    """Port-level dependencies: connections plus the input to output paths inside each unit"""
    graph = nx.DiGraph()
    for inst in model_def.instances:
        unit = model_def.unit(inst.unit)
        graph.add_nodes_from(qualify(inst.name, port.name) for port in unit.in_ports + unit.out_ports)
        for spec in unit.behaviours:
            graph.add_edges_from((qualify(inst.name, name), qualify(inst.name, spec.out)) for name in spec.inputs)
    graph.add_edges_from((c.source, c.dest) for c in model_def.connections)
    return graph


def _topological_order(graph: nx.DiGraph) -> tuple[str, ...]:
    # Smallest ready port first, so the order does not depend on declaration order
    return tuple(nx.lexicographical_topological_sort(graph))


def ground(model_def: ModelDef) -> GroundModel:
    """Expand instances into the cause and port variable universe"""
    report = validate(model_def)
    if not report.ok:
        first = report.errors[0]
        raise ValueError(f"Model '{model_def.name}' is invalid ({len(report.errors)} errors), "
                         f"first at line {first.line}, {first.location}: {first.message}")

    causes, cause_beliefs, environmental, ports = [], {}, set(), []
    for inst in model_def.instances:
        unit = model_def.unit(inst.unit)
        for state in unit.states:
            state_var = qualify(inst.name, state.name)
            if state.environmental:
                environmental.add(state_var)
            for mode in state.fault_modes:
                cid = cause_id(state_var, mode)
                causes.append(cid)
                cause_beliefs[cid] = state.belief
        for port in unit.in_ports + unit.out_ports:
            ports.append(qualify(inst.name, port.name))

    graph = dependency_graph(model_def)
    gm = GroundModel(
        model=model_def,
        causes=tuple(sorted(causes)),
        ports=tuple(sorted(ports)),
        observables=tuple(sorted({o.port for o in model_def.observables})),
        graph=graph,
        order=_topological_order(graph),
        cause_beliefs=cause_beliefs,
        environmental=frozenset(environmental),
    )
    logger.debug(f"Grounded model {model_def.name}: {len(gm.causes)} causes, {len(gm.ports)} ports")
    return gm
