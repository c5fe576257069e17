__all__ = [
    "Config",
    "Observation",
    "ObservationKind",
    "compile_theory",
    "correlate",
    "explain_symptom",
    "expand_link_faults",
    "ground",
    "load_model",
    "rank",
    "simulate",
]

from .config import Config
from .dsl import load_model
from .explain import Observation, ObservationKind, correlate, expand_link_faults, explain_symptom, rank
from .model import ground
from .sim import simulate
from .theory import compile_theory
