import logging
from typing import Iterable

from correlator.calculus.belief import Assumption
from correlator.calculus.calculus_intf import Calculus


class Cardinality(Calculus):
    """Number of not-working assumptions; causation events are free"""

    # Public attributes
    logger: logging.Logger = logging.getLogger(__name__)
    name: str = "cardinality"

    def atom_cost(self, assumption: Assumption) -> float:
        return 1 if assumption.is_cause else 0

    def cost(self, assumptions: Iterable[Assumption]) -> float:
        return cardinality_cost(self._unique(assumptions))

    def belief(self, assumptions: Iterable[Assumption]) -> float:
        # Single faults rank first, reported as 1 / (1 + faults)
        return 1.0 / (1.0 + self.cost(assumptions))


def cardinality_cost(assumptions: Iterable[Assumption]) -> int:
    return sum(1 for a in assumptions if a.is_cause)
