"""
Command-line front end.

    correlator.py validate --model m.fm
    correlator.py compile  --model m.fm [--dump]
    correlator.py explain  --model m.fm --obs log.jsonl [--calculus c] [--bound b] [--max k] [--expand]
    correlator.py simulate --model m.fm --inject inst.state=mode@t [--seed s] [--horizon h]
    correlator.py oracle   --model m.fm --obs log.jsonl [--calculus c] [--bound b]

Exit codes: 0 success, 1 model or runtime errors (reported as JSON), 2 usage errors.
"""
import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from typing import TextIO

from correlator import dsl, report
from correlator.calculus import CALCULI, load_calculus
from correlator.config import Config, parse_bound
from correlator.explain import correlate, expand_link_faults, rank
from correlator.model import ValidationReport, ground, validate
from correlator.oracle import oracle_explanations
from correlator.sim import Injection, simulate
from correlator.theory import compile_theory

# Some constants
PROGRAM_VERSION: str = "0.1"
EXIT_OK = 0
EXIT_ERROR = 1
EXIT_USAGE = 2
SUBCOMMANDS = ("validate", "compile", "explain", "simulate", "oracle")

logger = logging.getLogger(__name__)


@dataclass
class RunConfig:
    subcommand: str
    model: str
    observations: str | None = None
    calculus: str = "possibilistic"
    bound: float = float("inf")
    max_explanations: int = 20
    expand_link_faults: bool = False
    output_format: str = "json"
    horizon: int = 1000
    seed: int | None = None
    injections: list[Injection] = field(default_factory=list)
    report_normals: bool = False
    dump: bool = False
    time_unit: str = "ticks"

    def __post_init__(self):
        if self.bound < 0:
            raise ValueError(f"Cost bound must be non-negative, got {self.bound}")
        if self.max_explanations < 1:
            raise ValueError(f"Max explanations must be at least 1, got {self.max_explanations}")

    @classmethod
    def from_arguments(cls, args: argparse.Namespace, conf: dict) -> "RunConfig":
        """Flags override configuration values, configuration overrides defaults"""
        def pick(flag, value):
            return value if flag is None else flag

        return cls(
            subcommand=args.subcommand,
            model=args.model,
            observations=getattr(args, "obs", None),
            calculus=pick(getattr(args, "calculus", None), conf["engine"]["calculus"]),
            bound=pick(getattr(args, "bound", None), conf["engine"]["bound"]),
            max_explanations=pick(getattr(args, "max", None), conf["engine"]["max_explanations"]),
            expand_link_faults=getattr(args, "expand", False) or conf["engine"]["expand_link_faults"],
            output_format=pick(getattr(args, "format", None), conf["output"]["format"]),
            horizon=getattr(args, "horizon", 1000),
            seed=getattr(args, "seed", None),
            injections=[Injection.parse(i) for i in getattr(args, "inject", None) or []],
            report_normals=getattr(args, "normals", False),
            dump=getattr(args, "dump", False),
            time_unit=conf["model"]["time_unit"],
        )


def main() -> int:
    logging.basicConfig()
    return run(sys.argv[1:])


def run(argv: list[str], out: TextIO | None = None) -> int:
    out = sys.stdout if out is None else out
    root_logger = logging.getLogger()

    try:
        args = parse_arguments(argv)
    except SystemExit as exc:
        # argparse already printed its message
        return EXIT_OK if exc.code in (0, None) else EXIT_USAGE

    try:
        conf = Config(config_file=args.configfile).config
        if args.verbose or conf["logging"]["debug"]:
            root_logger.setLevel(logging.DEBUG)
            root_logger.debug("Running in verbose mode")
        else:
            root_logger.setLevel(logging.INFO)

        rc = RunConfig.from_arguments(args, conf)
        return COMMANDS[rc.subcommand](rc, out)
    except (ValueError, KeyError, OSError) as exc:
        message = exc.args[0] if isinstance(exc, KeyError) and exc.args else str(exc)
        logger.error(message)
        print(report.to_json(report.error_dict(message, type(exc).__name__)), file=out)
        return EXIT_ERROR


def _load(rc: RunConfig):
    model_def = dsl.load_model(rc.model, rc.time_unit)
    return compile_theory(ground(model_def)), model_def


def cmd_validate(rc: RunConfig, out: TextIO) -> int:
    try:
        model_def = dsl.load_model(rc.model, rc.time_unit)
    except dsl.DslError as exc:
        result = ValidationReport()
        result.error(exc.line, rc.model, exc.message)
    else:
        result = validate(model_def)
    print(report.to_json(report.validation_dict(result)), file=out)
    return EXIT_OK if result.ok else EXIT_ERROR


def cmd_compile(rc: RunConfig, out: TextIO) -> int:
    theory, model_def = _load(rc)
    if rc.dump:
        out.write(dsl.dump(model_def))
        return EXIT_OK
    summary = {
        "model": model_def.name,
        "time_unit": model_def.time_unit,
        "ports": list(theory.ports),
        "observables": list(theory.observables),
        "causes": list(theory.causes),
        "events": list(theory.events),
        "rules": {head: [t.path_id for t in rule.terms] for head, rule in theory.abnormal.items()},
    }
    print(report.to_json(summary), file=out)
    return EXIT_OK


def cmd_explain(rc: RunConfig, out: TextIO) -> int:
    theory, _ = _load(rc)
    observations = report.load_observations(rc.observations)
    calculus = load_calculus(rc.calculus)

    eset = correlate(theory, observations, calculus, rc.bound)
    if rc.expand_link_faults:
        eset = expand_link_faults(eset, theory, calculus, rc.bound)
    ranked = rank(eset, calculus)[:rc.max_explanations]
    logger.info(f"{len(eset)} explanations within bound {rc.bound}, reporting {len(ranked)}")

    if rc.output_format == "table":
        print(report.format_table(ranked), file=out)
    else:
        print(report.to_json([report.explanation_dict(e) for e in ranked]), file=out)
    return EXIT_OK


def cmd_simulate(rc: RunConfig, out: TextIO) -> int:
    theory, _ = _load(rc)
    log = simulate(theory, rc.injections, rc.seed, rc.horizon, rc.report_normals)
    report.write_observations(log.records, out)
    return EXIT_OK


def cmd_oracle(rc: RunConfig, out: TextIO) -> int:
    theory, _ = _load(rc)
    observations = report.load_observations(rc.observations)
    calculus = load_calculus(rc.calculus)
    supports = oracle_explanations(theory, observations, calculus, rc.bound)
    document = [{
        "assumptions": sorted(s.assumptions),
        "intervals": {v: report.interval_dict(i) for v, i in s.exists},
        "normals": {v: report.interval_dict(i) for v, i in s.during},
        "cost": report.time_value(s.cost) if s.cost == float("inf") else s.cost,
        "belief": s.belief,
        "paths": sorted(s.trace),
    } for s in supports[:rc.max_explanations]]
    print(report.to_json(document), file=out)
    return EXIT_OK


COMMANDS = {
    "validate": cmd_validate,
    "compile": cmd_compile,
    "explain": cmd_explain,
    "simulate": cmd_simulate,
    "oracle": cmd_oracle,
}


def _bound_flag(text: str) -> float:
    try:
        bound = parse_bound(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc))
    if math.isnan(bound) or bound < 0:
        raise argparse.ArgumentTypeError(f"cost bound must be non-negative, got '{text}'")
    return bound


def _positive_int(text: str) -> int:
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected an integer, got '{text}'")
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be at least 1, got {value}")
    return value


def parse_arguments(argv: list[str]) -> argparse.Namespace:
    parser = argparse.ArgumentParser(
        prog="correlator",
        description="Explain timestamped fault symptoms from a functional model of the system",
    )
    parser.add_argument("--configfile", "-c", type=str, default="correlator.yaml", help="Configuration file")
    parser.add_argument("-v", "--verbose", action="store_true", help="Log debug information")
    parser.add_argument("--version", action="version", version=f"%(prog)s v{PROGRAM_VERSION}")

    sub = parser.add_subparsers(dest="subcommand", required=True)
    for name in SUBCOMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--model", "-m", required=True, help="Model file in the correlator DSL")
        if name in ("explain", "oracle"):
            p.add_argument("--obs", required=True, help="Observation log, JSON lines")
            p.add_argument("--calculus", choices=CALCULI, default=None, help="Cost calculus")
            p.add_argument("--bound", type=_bound_flag, default=None, help="Cost bound, 'inf' for none")
            p.add_argument("--max", type=_positive_int, default=None, help="Report at most this many explanations")
        if name == "explain":
            p.add_argument("--format", choices=report.FORMATS, default=None, help="Output format")
            p.add_argument("--expand", action="store_true", help="Add substituted link fault explanations")
        if name == "compile":
            p.add_argument("--dump", action="store_true", help="Print the model in canonical DSL form")
        if name == "simulate":
            p.add_argument("--inject", action="append", required=True, help="Fault, e.g. ovt.self=failed@0")
            p.add_argument("--seed", type=int, default=None, help="Random seed")
            p.add_argument("--horizon", type=int, default=1000, help="Last tick to log")
            p.add_argument("--normals", action="store_true", help="Also log normal-through records")
    return parser.parse_args(argv)
