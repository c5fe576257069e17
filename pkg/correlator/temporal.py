"""
Interval algebra over integer time ticks.

Event convention (ON): a variable is in its normal value through time t inclusive and in
its abnormal value strictly after t. Existential constraints read "at some time within",
During constraints read "at every instant of".
"""
import math
from dataclasses import dataclass
from enum import Enum

# Sentinels, compare correctly against ints
NEG_INF: float = -math.inf
POS_INF: float = math.inf

TimePoint = int | float


class Polarity(Enum):
    ABNORMAL_EVENT = "abnormal-event"
    NORMAL_HOLDS = "normal-holds"


class Mode(Enum):
    EXISTS_WITHIN = "exists-within"
    DURING = "during"


@dataclass(frozen=True, order=True)
class Interval:
    lo: TimePoint
    hi: TimePoint
    lo_open: bool = False
    hi_open: bool = False

    def __post_init__(self):
        # Infinite ends are always open
        if self.lo == NEG_INF and not self.lo_open:
            object.__setattr__(self, "lo_open", True)
        if self.hi == POS_INF and not self.hi_open:
            object.__setattr__(self, "hi_open", True)

    @classmethod
    def point(cls, t: int) -> "Interval":
        return cls(t, t)

    @classmethod
    def prefix(cls, c: TimePoint, closed: bool = False) -> "Interval":
        """(-inf, c) or (-inf, c]"""
        return cls(NEG_INF, c, True, not closed)

    @property
    def is_empty(self) -> bool:
        if self.lo < self.hi:
            return False
        if self.lo > self.hi:
            return True
        return self.lo_open or self.hi_open

    @property
    def is_prefix(self) -> bool:
        return self.lo == NEG_INF

    def contains(self, t: TimePoint) -> bool:
        above = t > self.lo or (t == self.lo and not self.lo_open)
        below = t < self.hi or (t == self.hi and not self.hi_open)
        return above and below

    def covers(self, other: "Interval") -> bool:
        """True if `other` is a subset of this interval"""
        if other.is_empty:
            return True
        lo_ok = other.lo > self.lo or (other.lo == self.lo and (other.lo_open or not self.lo_open))
        hi_ok = other.hi < self.hi or (other.hi == self.hi and (other.hi_open or not self.hi_open))
        return lo_ok and hi_ok

    def __str__(self) -> str:
        return f"{'(' if self.lo_open else '['}{_fmt(self.lo)},{_fmt(self.hi)}{')' if self.hi_open else ']'}"


def _fmt(t: TimePoint) -> str:
    if t == NEG_INF:
        return "-inf"
    if t == POS_INF:
        return "+inf"
    return str(int(t))


@dataclass(frozen=True)
class Delay:
    d_min: int = 0
    d_max: TimePoint = 0

    def __post_init__(self):
        if self.d_min < 0 or math.isinf(self.d_min):
            raise ValueError(f"Delay lower bound must be a non-negative integer, is {self.d_min}")
        if self.d_max < self.d_min:
            raise ValueError(f"Delay upper bound {self.d_max} is below lower bound {self.d_min}")

    def __str__(self) -> str:
        return f"[{self.d_min},{_fmt(self.d_max)}]"


ZERO_DELAY = Delay(0, 0)


@dataclass(frozen=True)
class TemporalConstraint:
    variable: str
    polarity: Polarity
    interval: Interval

    @property
    def mode(self) -> Mode:
        # Events are existential, normal values hold throughout
        if self.polarity is Polarity.ABNORMAL_EVENT:
            return Mode.EXISTS_WITHIN
        return Mode.DURING

    @classmethod
    def event(cls, variable: str, interval: Interval) -> "TemporalConstraint":
        return cls(variable, Polarity.ABNORMAL_EVENT, interval)

    @classmethod
    def holds(cls, variable: str, interval: Interval) -> "TemporalConstraint":
        if not interval.is_prefix:
            raise ValueError(f"During constraint on {variable} must be a prefix interval, got {interval}")
        return cls(variable, Polarity.NORMAL_HOLDS, interval)


def back_project(effect: Interval, delay: Delay) -> Interval:
    """Interval in which a cause must occur for its effect to fall in `effect`"""
    return Interval(effect.lo - delay.d_max, effect.hi - delay.d_min, effect.lo_open, effect.hi_open)


def intersect_exists(a: Interval | None, b: Interval | None) -> Interval | None:
    """Intersection of two existential intervals, None when empty"""
    if a is None or b is None:
        return None

    if a.lo > b.lo:
        lo, lo_open = a.lo, a.lo_open
    elif b.lo > a.lo:
        lo, lo_open = b.lo, b.lo_open
    else:
        lo, lo_open = a.lo, a.lo_open or b.lo_open

    if a.hi < b.hi:
        hi, hi_open = a.hi, a.hi_open
    elif b.hi < a.hi:
        hi, hi_open = b.hi, b.hi_open
    else:
        hi, hi_open = a.hi, a.hi_open or b.hi_open

    result = Interval(lo, hi, lo_open, hi_open)
    return None if result.is_empty else result


def merge_during(a: Interval, b: Interval) -> Interval:
    """Both prefixes must hold, so the variable holds over their cover"""
    if not (a.is_prefix and b.is_prefix):
        raise ValueError(f"merge_during expects prefix intervals, got {a} and {b}")

    if a.hi > b.hi:
        return a
    if b.hi > a.hi:
        return b
    return Interval(NEG_INF, a.hi, True, a.hi_open and b.hi_open)


def refine_exists_against_during(event: Interval, during: Interval) -> Interval | None:
    """Restrict an event to the time after its variable stops being required normal"""
    if not during.is_prefix:
        raise ValueError(f"During constraint must be a prefix interval, got {during}")
    if during.hi == NEG_INF:
        return event
    after = Interval(during.hi, POS_INF, not during.hi_open, True)
    return intersect_exists(event, after)


if __name__ == "__main__":
    # Quick functionality checks for this module
    print(back_project(Interval.point(100), Delay(5, 60)))
    print(intersect_exists(Interval(40, 95), Interval(50, 120)))
    print(refine_exists_against_during(Interval(40, 95), Interval.prefix(50, closed=True)))
