from dataclasses import dataclass
from enum import Enum


class AssumptionKind(Enum):
    CAUSE = "cause"
    CAUSATION = "causation"


@dataclass(frozen=True)
class Belief:
    """
    Uncertainty attached to a cause event or causation event.
    Possibility is stored for completeness but never used in costs.
    """
    p: float | None = None
    n: float | None = None
    pi: float | None = None

    def __post_init__(self):
        for name in ("p", "n", "pi"):
            value = getattr(self, name)
            if value is not None and not 0.0 <= value <= 1.0:
                raise ValueError(f"Belief value {name}={value} outside [0, 1]")
        if self.n is not None and self.pi is not None and self.n > self.pi:
            raise ValueError(f"Necessity {self.n} exceeds possibility {self.pi}")

    @property
    def is_impossible(self) -> bool:
        return self.p == 0.0 or self.n == 0.0

    def negated(self) -> "Belief":
        """Belief in the complementary event"""
        p = None if self.p is None else 1.0 - self.p
        pi = 1.0 if self.pi is None else self.pi
        n = None if self.n is None else 1.0 - pi
        pi_neg = None if self.n is None else 1.0 - self.n
        return Belief(p=p, n=n, pi=pi_neg)


@dataclass(frozen=True)
class Assumption:
    id: str
    kind: AssumptionKind
    belief: Belief

    @property
    def is_cause(self) -> bool:
        return self.kind is AssumptionKind.CAUSE
