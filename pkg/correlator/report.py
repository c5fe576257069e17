"""
Serialization of observation logs and explanation sets.

Observations are JSON lines, either {"time": 100, "port": "bus.shed", "value": "abnormal"}
or {"port": "bus.shed", "normal_through": 150}.
Explanation output is a JSON document with sorted keys; infinite interval ends are written
as the strings "-inf" and "+inf".
"""
import json
import logging
import math
from pathlib import Path
from typing import Iterable, TextIO

from correlator.explain import Explanation, Observation, ObservationKind
from correlator.model import ValidationReport
from correlator.temporal import Interval

logger = logging.getLogger(__name__)

FORMATS = ("json", "table")


def time_value(t: int | float) -> int | str:
    if math.isinf(t):
        return "+inf" if t > 0 else "-inf"
    return int(t)


def interval_dict(interval: Interval) -> dict:
    return {
        "lo": time_value(interval.lo),
        "hi": time_value(interval.hi),
        "lo_open": interval.lo_open,
        "hi_open": interval.hi_open,
    }


def observation_dict(obs: Observation) -> dict:
    if obs.kind is ObservationKind.NORMAL_THROUGH:
        return {"port": obs.port, "normal_through": obs.time}
    return {"port": obs.port, "time": obs.time, "value": "abnormal"}


def parse_observation(record: dict, line: int = 0) -> Observation:
    if not isinstance(record, dict) or "port" not in record:
        raise ValueError(f"Observation on line {line} has no port")
    try:
        if "normal_through" in record:
            return Observation.normal_through(record["port"], int(record["normal_through"]))
        if record.get("value", "abnormal") != "abnormal":
            raise ValueError(f"value must be 'abnormal', got '{record['value']}'")
        return Observation.abnormal_at(record["port"], int(record["time"]))
    except KeyError as exc:
        raise ValueError(f"Observation on line {line} is missing {exc}")
    except (TypeError, ValueError) as exc:
        raise ValueError(f"Observation on line {line} is malformed: {exc}")


def read_observations(stream: TextIO) -> list[Observation]:
    observations = []
    for number, raw in enumerate(stream, start=1):
        raw = raw.strip()
        if not raw or raw.startswith("#"):
            continue
        try:
            record = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise ValueError(f"Observation on line {number} is not valid JSON: {exc.msg}")
        observations.append(parse_observation(record, number))
    logger.debug(f"Read {len(observations)} observations")
    return observations


def load_observations(path: str | Path) -> list[Observation]:
    with open(path, 'r') as stream:
        return read_observations(stream)


def write_observations(observations: Iterable[Observation], stream: TextIO):
    for obs in observations:
        stream.write(json.dumps(observation_dict(obs), sort_keys=True) + "\n")


def explanation_dict(explanation: Explanation) -> dict:
    return {
        "causes": [{"var": c.variable, "mode": c.mode, "interval": interval_dict(c.constraint.interval)}
                   for c in explanation.causes],
        "normals": [{"var": n.variable, "interval": interval_dict(n.interval)} for n in explanation.normals],
        "events": sorted(explanation.causation_events),
        "belief": explanation.belief,
        "cost": time_value(explanation.cost) if math.isinf(explanation.cost) else explanation.cost,
        "paths": sorted(explanation.path_trace),
    }


def to_json(document: dict | list) -> str:
    return json.dumps(document, sort_keys=True, indent=2)


def validation_dict(report: ValidationReport) -> dict:
    report = report.sorted()
    return {
        "ok": report.ok,
        "errors": [i.as_dict() for i in report.errors],
        "warnings": [i.as_dict() for i in report.warnings],
    }


def error_dict(message: str, kind: str = "error") -> dict:
    return {"ok": False, "errors": [{"kind": kind, "message": message}]}


def format_table(explanations: Iterable[Explanation]) -> str:
    """One line per explanation, cheapest first"""
    rows = [("#", "cost", "belief", "causes", "events")]
    for number, e in enumerate(explanations, start=1):
        causes = ", ".join(f"{c.variable}={c.mode} in {c.constraint.interval}" for c in e.causes) or "-"
        rows.append((str(number), f"{e.cost:.4g}", f"{e.belief:.4g}", causes,
                     ", ".join(sorted(e.causation_events)) or "-"))
    widths = [max(len(r[i]) for r in rows) for i in range(len(rows[0]) - 1)]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)) + "  " + row[-1] for row in rows]
    return "\n".join(line.rstrip() for line in lines)
