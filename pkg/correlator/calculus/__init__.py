__all__ = [
    "Assumption",
    "AssumptionKind",
    "Belief",
    "Calculus",
    "Cardinality",
    "Possibilistic",
    "Probabilistic",
    "CALCULI",
    "load_calculus",
]

import importlib

import inflection

from .belief import Assumption, AssumptionKind, Belief
from .calculus_intf import Calculus
from .cardinality import Cardinality
from .possibilistic import Possibilistic
from .probabilistic import Probabilistic

CALCULI: tuple[str, ...] = ("possibilistic", "probabilistic", "cardinality")


def load_calculus(name: str) -> Calculus:
    """
    Instantiate a calculus by name.
    The module must be snake_cased, the class CamelCased, e.g. possibilistic -> Possibilistic
    """
    # Anything not alphanumeric or underscore is removed
    clean = ''.join(c for c in str(name) if c.isalnum() or c == '_')
    if clean not in CALCULI:
        raise KeyError(f"Unknown calculus '{name}', expected one of {list(CALCULI)}")

    module = importlib.import_module(f".{inflection.underscore(clean)}", __name__)
    return getattr(module, inflection.camelize(clean, uppercase_first_letter=True))()
