import logging
import math
from typing import Iterable

from correlator.calculus.belief import Assumption
from correlator.calculus.calculus_intf import Calculus


class Probabilistic(Calculus):
    """
    Independent assumptions along a single causal path.
    Costs are -log p summed in the log domain; beliefs are recomputed as an exact product
    so rounding in the log domain never leaks into reported values.
    """

    # Public attributes
    logger: logging.Logger = logging.getLogger(__name__)
    name: str = "probabilistic"

    def atom_cost(self, assumption: Assumption) -> float:
        return _atom_cost(assumption)

    def cost(self, assumptions: Iterable[Assumption]) -> float:
        return probabilistic_cost(self._unique(assumptions))

    def belief(self, assumptions: Iterable[Assumption]) -> float:
        unique = self._unique(assumptions)
        for a in unique:
            _atom_cost(a)  # validates p
        return math.prod(a.belief.p for a in unique)


def _atom_cost(assumption: Assumption) -> float:
    p = assumption.belief.p
    if p is None:
        raise ValueError(f"Assumption {assumption.id} carries no prior probability, required by the probabilistic calculus")
    if p == 0.0:
        return math.inf
    return -math.log(p)


def probabilistic_cost(assumptions: Iterable[Assumption]) -> float:
    """Sum of -log p, correctly rounded so supersets never cost less"""
    costs = [_atom_cost(a) for a in assumptions]
    if any(math.isinf(c) for c in costs):
        return math.inf
    return math.fsum(costs)
