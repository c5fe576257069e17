"""
Line-oriented model language.

    model <name> timeunit <unit>
    unit <Name> {
        state <s> modes(<m>,...) prior <p> necessity <n> [possibility <pi>] [env]
        in <p> [domain(<v>,...)]
        out <p> [domain(<v>,...)]
        link [in=<p>] out=<p> cause=<s> alpha(p=<v>,n=<v>) delay=[a,b] fault_delay=[a,b]
        join2 in1=<p> in2=<p> out=<p> alpha(...) beta(...) psi(...) sigma(...)
              delay1=[0,b] delay2=[0,b] delay_joint=[a,b]
    }
    instance <i> : <Unit>
    connect <i.p> -> <i.p>
    observe <i.p>

`#` starts a comment, statements end at a newline or `;`.
"""
import logging
import math
import re
from pathlib import Path

from correlator.calculus import Belief
from correlator.model import (BINARY_DOMAIN, Connection, InstanceDef, Join2Spec, LinkSpec, ModelDef,
                              Observable, PortDef, StateVarDef, UnitDef)
from correlator.temporal import ZERO_DELAY, Delay

logger = logging.getLogger(__name__)

_TOKEN = re.compile(r"(\w+)\(([^)]*)\)|(\w+)=(\[[^\]]*\]|[\w.+\-]+)|(\S+)")
_DELAY = re.compile(r"^\[\s*(\d+)\s*,\s*(\d+|\+?inf)\s*\]$")
_BELIEF_KEYS = {"p": "p", "n": "n", "pi": "pi"}


class DslError(ValueError):
    """Syntax error in a model text, carries the offending line"""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line
        self.message = message


def load_model(path: str | Path, time_unit: str = "ticks") -> ModelDef:
    with open(path, 'r') as stream:
        return parse(stream.read(), time_unit)


def parse(text: str, time_unit: str = "ticks") -> ModelDef:
    """Parse model text; structural problems are left for `validate`. `time_unit` applies when none is declared"""
    statements = list(_statements(text))
    name = None
    units, instances, connections, observables = [], [], [], []

    i = 0
    while i < len(statements):
        line, stmt = statements[i]
        words = stmt.split()
        keyword = words[0]

        if keyword == "model":
            if len(words) not in (2, 4) or (len(words) == 4 and words[2] != "timeunit"):
                raise DslError(line, "expected 'model <name> timeunit <unit>'")
            name = words[1]
            if len(words) == 4:
                time_unit = words[3]
        elif keyword == "unit":
            if len(words) != 2 or i + 1 >= len(statements) or statements[i + 1][1] != "{":
                raise DslError(line, "expected 'unit <Name> {'")
            body = []
            i += 2
            while i < len(statements) and statements[i][1] != "}":
                body.append(statements[i])
                i += 1
            if i >= len(statements):
                raise DslError(line, f"unit {words[1]} is missing its closing brace")
            units.append(_parse_unit(words[1], line, body))
        elif keyword == "instance":
            match = re.fullmatch(r"instance\s+(\S+)\s*:\s*(\S+)", stmt)
            if match is None:
                raise DslError(line, "expected 'instance <name> : <Unit>'")
            instances.append(InstanceDef(match[1], match[2], line))
        elif keyword == "connect":
            match = re.fullmatch(r"connect\s+(\S+)\s*->\s*(\S+)", stmt)
            if match is None:
                raise DslError(line, "expected 'connect <i.p> -> <i.p>'")
            connections.append(Connection(match[1], match[2], line))
        elif keyword == "observe":
            if len(words) != 2:
                raise DslError(line, "expected 'observe <i.p>'")
            observables.append(Observable(words[1], line))
        else:
            raise DslError(line, f"unexpected statement '{keyword}'")
        i += 1

    if name is None:
        raise DslError(1, "missing 'model <name>' declaration")

    return ModelDef(name, time_unit, tuple(units), tuple(instances), tuple(connections), tuple(observables))


def _statements(text: str):
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        line = line.replace("{", ";{;").replace("}", ";};")
        for stmt in line.split(";"):
            stmt = stmt.strip()
            if stmt:
                yield number, stmt


def _parse_unit(name: str, line: int, body: list[tuple[int, str]]) -> UnitDef:
    states, in_ports, out_ports, behaviours = [], [], [], []
    for number, stmt in body:
        keyword, _, rest = stmt.partition(" ")
        if keyword == "state":
            states.append(_parse_state(number, rest))
        elif keyword in ("in", "out"):
            port = _parse_port(number, rest)
            (in_ports if keyword == "in" else out_ports).append(port)
        elif keyword == "link":
            behaviours.append(_parse_link(number, rest))
        elif keyword == "join2":
            behaviours.append(_parse_join2(number, rest))
        else:
            raise DslError(number, f"unexpected '{keyword}' inside unit {name}")
    return UnitDef(name, tuple(states), tuple(in_ports), tuple(out_ports), tuple(behaviours), line)


def _tokens(line: int, text: str) -> tuple[dict[str, str], dict[str, str], list[str]]:
    """Split into group(args), key=value and bare words"""
    groups, pairs, words = {}, {}, []
    for match in _TOKEN.finditer(text):
        if match[1] is not None:
            groups[match[1]] = match[2]
        elif match[3] is not None:
            pairs[match[3]] = match[4]
        else:
            words.append(match[5])
    return groups, pairs, words


def _parse_state(line: int, text: str) -> StateVarDef:
    groups, pairs, words = _tokens(line, text)
    if not words or "modes" not in groups:
        raise DslError(line, "expected 'state <s> modes(<m>,...)'")
    name, rest = words[0], words[1:]
    modes = tuple(m.strip() for m in groups["modes"].split(",") if m.strip())

    values = {}
    environmental = False
    keys = {"prior": "p", "necessity": "n", "possibility": "pi"}
    j = 0
    while j < len(rest):
        word = rest[j]
        if word == "env":
            environmental = True
            j += 1
        elif word in keys and j + 1 < len(rest):
            values[keys[word]] = _number(line, rest[j + 1])
            j += 2
        else:
            raise DslError(line, f"unexpected '{word}' in state {name}")
    return StateVarDef(name, modes, _belief(line, values), environmental, line)


def _parse_port(line: int, text: str) -> PortDef:
    groups, pairs, words = _tokens(line, text)
    if len(words) != 1:
        raise DslError(line, "expected a single port name")
    domain = BINARY_DOMAIN
    if "domain" in groups:
        domain = tuple(v.strip() for v in groups["domain"].split(",") if v.strip())
    return PortDef(words[0], domain, line)


def _parse_link(line: int, text: str) -> LinkSpec:
    groups, pairs, words = _tokens(line, text)
    if words or "out" not in pairs or "cause" not in pairs:
        raise DslError(line, "expected 'link [in=<p>] out=<p> cause=<s> ...'")
    alpha = _parse_belief(line, groups["alpha"]) if "alpha" in groups else None
    return LinkSpec(
        out=pairs["out"],
        cause=pairs["cause"],
        input=pairs.get("in"),
        alpha=alpha,
        delay=_parse_delay(line, pairs.get("delay")),
        fault_delay=_parse_delay(line, pairs.get("fault_delay")),
        line=line,
    )


def _parse_join2(line: int, text: str) -> Join2Spec:
    groups, pairs, words = _tokens(line, text)
    missing = [k for k in ("in1", "in2", "out") if k not in pairs] + \
              [k for k in ("alpha", "beta", "psi", "sigma") if k not in groups]
    if words or missing:
        raise DslError(line, f"join2 is missing {missing}" if missing else f"unexpected {words}")
    return Join2Spec(
        in1=pairs["in1"],
        in2=pairs["in2"],
        out=pairs["out"],
        alpha=_parse_belief(line, groups["alpha"]),
        beta=_parse_belief(line, groups["beta"]),
        psi=_parse_belief(line, groups["psi"]),
        sigma=_parse_belief(line, groups["sigma"]),
        delay1=_parse_delay(line, pairs.get("delay1")),
        delay2=_parse_delay(line, pairs.get("delay2")),
        delay_joint=_parse_delay(line, pairs.get("delay_joint")),
        line=line,
    )


def _parse_belief(line: int, text: str) -> Belief:
    values = {}
    for item in text.split(","):
        key, sep, value = item.partition("=")
        key = key.strip()
        if not sep or key not in _BELIEF_KEYS:
            raise DslError(line, f"belief entries are p=, n= or pi=, got '{item.strip()}'")
        values[_BELIEF_KEYS[key]] = _number(line, value.strip())
    return _belief(line, values)


def _belief(line: int, values: dict) -> Belief:
    try:
        return Belief(**values)
    except ValueError as exc:
        raise DslError(line, str(exc)) from exc


def _parse_delay(line: int, text: str | None) -> Delay:
    if text is None:
        return ZERO_DELAY
    match = _DELAY.match(text)
    if match is None:
        raise DslError(line, f"delays are written [min,max], got '{text}'")
    upper = math.inf if "inf" in match[2] else int(match[2])
    try:
        return Delay(int(match[1]), upper)
    except ValueError as exc:
        raise DslError(line, str(exc)) from exc


def _number(line: int, text: str) -> float:
    try:
        return float(text)
    except ValueError:
        raise DslError(line, f"'{text}' is not a number")


def dump(model_def: ModelDef) -> str:
    """Canonical model text; parse(dump(m)) == m"""
    out = [f"model {model_def.name} timeunit {model_def.time_unit}"]
    for unit in model_def.units:
        out.append(f"unit {unit.name} {{")
        for state in unit.states:
            parts = [f"  state {state.name} modes({','.join(state.fault_modes)})"]
            for word, key in (("prior", "p"), ("necessity", "n"), ("possibility", "pi")):
                value = getattr(state.belief, key)
                if value is not None:
                    parts.append(f"{word} {value!r}")
            if state.environmental:
                parts.append("env")
            out.append(" ".join(parts))
        for keyword, ports in (("in", unit.in_ports), ("out", unit.out_ports)):
            for port in ports:
                domain = "" if port.domain == BINARY_DOMAIN else f" domain({','.join(port.domain)})"
                out.append(f"  {keyword} {port.name}{domain}")
        for spec in unit.behaviours:
            out.append("  " + _dump_behaviour(spec))
        out.append("}")
    out += [f"instance {i.name} : {i.unit}" for i in model_def.instances]
    out += [f"connect {c.source} -> {c.dest}" for c in model_def.connections]
    out += [f"observe {o.port}" for o in model_def.observables]
    return "\n".join(out) + "\n"


def _dump_behaviour(spec: LinkSpec | Join2Spec) -> str:
    if isinstance(spec, LinkSpec):
        parts = ["link"]
        if spec.input is not None:
            parts.append(f"in={spec.input}")
        parts += [f"out={spec.out}", f"cause={spec.cause}"]
        if spec.alpha is not None:
            parts.append(f"alpha({_dump_belief(spec.alpha)})")
        parts += [f"delay={_dump_delay(spec.delay)}", f"fault_delay={_dump_delay(spec.fault_delay)}"]
        return " ".join(parts)
    return (f"join2 in1={spec.in1} in2={spec.in2} out={spec.out} "
            f"alpha({_dump_belief(spec.alpha)}) beta({_dump_belief(spec.beta)}) "
            f"psi({_dump_belief(spec.psi)}) sigma({_dump_belief(spec.sigma)}) "
            f"delay1={_dump_delay(spec.delay1)} delay2={_dump_delay(spec.delay2)} "
            f"delay_joint={_dump_delay(spec.delay_joint)}")


def _dump_belief(belief: Belief) -> str:
    return ",".join(f"{k}={getattr(belief, k)!r}" for k in ("p", "n", "pi") if getattr(belief, k) is not None)


def _dump_delay(delay: Delay) -> str:
    upper = "inf" if math.isinf(delay.d_max) else str(delay.d_max)
    return f"[{delay.d_min},{upper}]"
