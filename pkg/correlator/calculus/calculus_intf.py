import logging
import math
from abc import ABC, abstractmethod
from typing import Iterable

from correlator.calculus.belief import Assumption


class Calculus(ABC):
    """
    Cost function over sets of assumptions.
    Implementations must be monotone: a superset never costs less than its subset.
    """

    # Public attributes
    @property
    @abstractmethod
    def logger(self) -> logging.Logger:
        pass

    @property
    @abstractmethod
    def name(self) -> str:
        pass

    """
    Cost of a single assumption; +inf when the assumption has zero belief
    """
    @abstractmethod
    def atom_cost(self, assumption: Assumption) -> float:
        pass

    """
    Cost of a set of assumptions, the empty set costs `identity`
    """
    @abstractmethod
    def cost(self, assumptions: Iterable[Assumption]) -> float:
        pass

    """
    Belief reported for an explanation built from these assumptions
    """
    @abstractmethod
    def belief(self, assumptions: Iterable[Assumption]) -> float:
        pass

    @property
    def identity(self) -> float:
        return 0.0

    def admits(self, assumptions: Iterable[Assumption]) -> bool:
        return not math.isinf(self.cost(assumptions))

    """
    Deduplicate by id and sort, so set semantics hold whatever the caller passes
    """
    @staticmethod
    def _unique(assumptions: Iterable[Assumption]) -> list[Assumption]:
        return sorted({a.id: a for a in assumptions}.values(), key=lambda a: a.id)
