import logging
import math
from typing import Iterable

from correlator.calculus.belief import Assumption
from correlator.calculus.calculus_intf import Calculus


class Possibilistic(Calculus):
    """Necessity of a conjunction is the minimum of its members' necessities"""

    # Public attributes
    logger: logging.Logger = logging.getLogger(__name__)
    name: str = "possibilistic"

    def atom_cost(self, assumption: Assumption) -> float:
        return _atom_cost(assumption)

    def cost(self, assumptions: Iterable[Assumption]) -> float:
        return possibilistic_cost(self._unique(assumptions))

    def belief(self, assumptions: Iterable[Assumption]) -> float:
        # Read N directly, 1 - (1 - N) is not exact in floating point
        unique = self._unique(assumptions)
        for a in unique:
            _atom_cost(a)
        return min((a.belief.n for a in unique), default=1.0)


def _atom_cost(assumption: Assumption) -> float:
    n = assumption.belief.n
    if n is None:
        raise ValueError(f"Assumption {assumption.id} carries no necessity, required by the possibilistic calculus")
    if n == 0.0:
        return math.inf
    return 1.0 - n


def possibilistic_cost(assumptions: Iterable[Assumption]) -> float:
    """1 - min N, 0 for the empty environment"""
    return max((_atom_cost(a) for a in assumptions), default=0.0)
