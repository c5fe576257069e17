"""
Cost-bounded assumption-based label propagation.

Every node keeps the minimal consistent environments supporting it whose cost does not
exceed the bound asked for so far. Candidate environments wait on one global agenda
ordered by cost; those above the bound stay queued until a bound is raised.
"""
import heapq
import itertools
import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from correlator.calculus import Assumption, AssumptionKind, Belief, Calculus
from correlator.temporal import (Delay, Interval, Polarity, TemporalConstraint, back_project, intersect_exists,
                                 merge_during, refine_exists_against_during)

# Path ids look like `<head>#<k>` for abnormal terms and `<head>~<k>` for complement terms
PATH_SEPARATORS = "#~"


@dataclass(frozen=True)
class Environment:
    assumptions: frozenset[str]
    exists: tuple[tuple[str, Interval], ...] = ()
    during: tuple[tuple[str, Interval], ...] = ()
    cost: float = 0.0
    path_trace: frozenset[str] = frozenset()

    @property
    def sort_key(self) -> tuple:
        return (self.cost, tuple(sorted(self.assumptions)), self.exists, self.during,
                tuple(sorted(self.path_trace)))

    @property
    def constraints(self) -> list[TemporalConstraint]:
        return [TemporalConstraint.event(v, i) for v, i in self.exists] + \
               [TemporalConstraint.holds(v, i) for v, i in self.during]

    def subsumes(self, other: "Environment") -> bool:
        """Fewer assumptions, looser intervals and a shorter path trace"""
        if not (self.assumptions <= other.assumptions and self.path_trace <= other.path_trace):
            return False
        other_exists = dict(other.exists)
        for var, interval in self.exists:
            if var not in other_exists or not interval.covers(other_exists[var]):
                return False
        other_during = dict(other.during)
        for var, interval in self.during:
            if var not in other_during or not other_during[var].covers(interval):
                return False
        return True


@dataclass(eq=False)
class Node:
    name: str
    index: int
    assumption: Assumption | None = None
    justifications: list["Justification"] = field(default_factory=list)
    consumers: list["Justification"] = field(default_factory=list)
    bound: float = 0.0

    def __repr__(self) -> str:
        return f"Node({self.name})"


@dataclass(eq=False)
class Justification:
    consequent: Node
    antecedents: tuple[Node, ...]
    causation_events: tuple[str, ...] = ()
    constraints: tuple[TemporalConstraint, ...] = ()
    delay: Delay | None = None
    path_id: str | None = None
    single_path: bool = True


@dataclass(frozen=True)
class Label:
    node: str
    environments: tuple[Environment, ...]
    bound: float
    exhausted_below_bound: bool


class Engine:
    # Public attributes
    logger: logging.Logger
    calculus: Calculus
    default_bound: float
    emissions: list[tuple[str, float]]

    # Private attributes
    _nodes: dict[str, Node]
    _assumptions: dict[str, Assumption]
    _disjoint: dict[str, set[str]]
    _admitted: dict[int, list[Environment]]
    _agenda: list
    _counter: itertools.count
    _bound: float
    _pushed: int

    def __init__(self, calculus: Calculus, bound: float = 0.0):
        self.logger = logging.getLogger(__name__)
        self.calculus = calculus
        self.default_bound = bound
        self.emissions = []

        self._nodes = {}
        self._assumptions = {}
        self._disjoint = {}
        self._admitted = {}
        self._agenda = []
        self._counter = itertools.count()
        self._bound = -math.inf
        self._pushed = 0

    """Register an assumption; its node is supported by the singleton environment"""
    def add_assumption(self, id: str, belief: Belief, kind: AssumptionKind = AssumptionKind.CAUSE) -> Node:
        if id in self._assumptions:
            raise ValueError(f"Duplicate assumption '{id}'")
        assumption = Assumption(id, kind, belief)
        self._assumptions[id] = assumption
        node = self._new_node(id)
        node.assumption = assumption
        cost = self.calculus.cost([assumption])
        if not math.isinf(cost):
            self._push(node, Environment(frozenset([id]), cost=cost))
        return node

    def add_node(self, name: str) -> Node:
        if name in self._nodes:
            raise ValueError(f"Duplicate node '{name}'")
        return self._new_node(name)

    def node(self, name: str) -> Node:
        try:
            return self._nodes[name]
        except KeyError:
            raise KeyError(f"Unknown node '{name}'")

    def has_node(self, name: str) -> bool:
        return name in self._nodes

    def has_assumption(self, id: str) -> bool:
        return id in self._assumptions

    def declare_disjoint(self, a: str, b: str):
        """The two assumptions never hold together"""
        self._disjoint.setdefault(a, set()).add(b)
        self._disjoint.setdefault(b, set()).add(a)

    def add_justification(self, consequent: Node, antecedents: Sequence[Node], causation_events: Iterable[str] = (),
                          delay: Delay | None = None, path_id: str | None = None,
                          constraints: Iterable[TemporalConstraint] = (), single_path: bool = True):
        """
        consequent <- antecedents & causation_events, under extra temporal constraints.
        With a delay, the antecedents' existential intervals are read as effect windows and
        back-projected through it; `constraints` apply unshifted.
        Antecedents must precede the consequent in creation order, which keeps the network acyclic.
        """
        for node in (consequent, *antecedents):
            if self._nodes.get(node.name) is not node:
                raise KeyError(f"Node '{node.name}' does not belong to this engine")
        for node in antecedents:
            if node.index >= consequent.index:
                raise ValueError(f"Justification {node.name} -> {consequent.name} would create a cycle")
        events = tuple(sorted(set(causation_events)))
        for event in events:
            if event not in self._assumptions:
                raise KeyError(f"Causation event '{event}' is not a registered assumption")

        just = Justification(consequent, tuple(antecedents), events, tuple(constraints), delay, path_id, single_path)
        consequent.justifications.append(just)
        for node in just.antecedents:
            node.consumers.append(just)

        # Combine whatever the antecedents already hold
        for combo in itertools.product(*(self._admitted[a.index] for a in just.antecedents)):
            self._fire(just, combo)

    def query_label(self, node: Node, bound: float) -> list[Environment]:
        """Minimal consistent supporting environments with cost <= bound, cheapest first"""
        self._propagate(bound)
        return sorted((e for e in self._admitted[node.index] if e.cost <= bound), key=lambda e: e.sort_key)

    def raise_bound(self, node: Node, new_bound: float) -> list[Environment]:
        """Admit the environments between the node's current bound and `new_bound`"""
        if new_bound < node.bound:
            raise ValueError(f"Cannot lower the bound of {node.name} from {node.bound} to {new_bound}")
        self._propagate(new_bound)
        delta = sorted((e for e in self._admitted[node.index] if node.bound < e.cost <= new_bound),
                       key=lambda e: e.sort_key)
        node.bound = new_bound
        return delta

    def label(self, node: Node) -> Label:
        environments = self.query_label(node, node.bound)
        pending = any(item[-1] is node and item[0] <= node.bound for item in self._agenda)
        return Label(node.name, tuple(environments), node.bound, not pending)

    def assumption(self, id: str) -> Assumption:
        return self._assumptions[id]

    def _new_node(self, name: str) -> Node:
        if name in self._nodes:
            raise ValueError(f"Duplicate node '{name}'")
        node = Node(name, len(self._nodes), bound=self.default_bound)
        self._nodes[name] = node
        self._admitted[node.index] = []
        return node

    def _push(self, node: Node, env: Environment):
        heapq.heappush(self._agenda, (env.cost, len(env.assumptions), tuple(sorted(env.assumptions)),
                                      next(self._counter), env, node))
        self._pushed += 1

    def _propagate(self, bound: float):
        popped = 0
        while self._agenda and self._agenda[0][0] <= bound:
            *_, env, node = heapq.heappop(self._agenda)
            popped += 1
            if not self._admit(node, env):
                continue
            for just in node.consumers:
                position = just.antecedents.index(node)
                pools = [self._admitted[a.index] if i != position else [env]
                         for i, a in enumerate(just.antecedents)]
                for combo in itertools.product(*pools):
                    self._fire(just, combo)
        if bound > self._bound:
            self._bound = bound
        if popped:
            self.logger.debug(f"Propagated to bound {bound}: {popped} agenda items, {self._pushed} pushed, "
                              f"{len(self._agenda)} blocked")

    def _admit(self, node: Node, env: Environment) -> bool:
        label = self._admitted[node.index]
        if any(e.subsumes(env) for e in label):
            return False
        # Only an equal-cost environment can subsume one already admitted
        label[:] = [e for e in label if not env.subsumes(e)]
        label.append(env)
        self.emissions.append((node.name, env.cost))
        return True

    def _fire(self, just: Justification, combo: Sequence[Environment]):
        env = self.combine(combo, just.causation_events, just.constraints, just.path_id, just.single_path,
                           just.delay)
        if env is not None:
            self._push(just.consequent, env)

    def combine(self, envs: Sequence[Environment], events: Iterable[str] = (),
                constraints: Iterable[TemporalConstraint] = (), path_id: str | None = None,
                single_path: bool = True, delay: Delay | None = None) -> Environment | None:
        """Union of environments; None when the union is inconsistent or has zero belief"""
        assumptions = frozenset(events).union(*(e.assumptions for e in envs))
        for a in assumptions:
            partners = self._disjoint.get(a)
            if partners and not partners.isdisjoint(assumptions):
                return None

        trace = frozenset().union(*(e.path_trace for e in envs))
        if path_id is not None:
            trace = trace | {path_id}
        if single_path and not _single_path(trace):
            return None

        exists: dict[str, Interval] = {}
        during: dict[str, Interval] = {}
        for var, interval in itertools.chain.from_iterable(e.exists for e in envs):
            if delay is not None:
                interval = back_project(interval, delay)
            exists[var] = intersect_exists(exists[var], interval) if var in exists else interval
            if exists[var] is None:
                return None
        for var, interval in itertools.chain.from_iterable(e.during for e in envs):
            during[var] = merge_during(during[var], interval) if var in during else interval
        for c in constraints:
            if c.polarity is Polarity.ABNORMAL_EVENT:
                exists[c.variable] = intersect_exists(exists[c.variable], c.interval) \
                    if c.variable in exists else c.interval
                if exists[c.variable] is None:
                    return None
            else:
                during[c.variable] = merge_during(during[c.variable], c.interval) \
                    if c.variable in during else c.interval

        # An event can only happen once its variable is no longer required normal
        for var in exists.keys() & during.keys():
            exists[var] = refine_exists_against_during(exists[var], during[var])
            if exists[var] is None:
                return None

        cost = self.calculus.cost(self._assumptions[a] for a in assumptions)
        if math.isinf(cost):
            return None
        return Environment(assumptions, tuple(sorted(exists.items())), tuple(sorted(during.items())), cost, trace)


def path_group(path_id: str) -> str:
    """`head#k` -> `head#`, terms of one rule share a group"""
    cut = max(path_id.rfind(c) for c in PATH_SEPARATORS)
    return path_id[:cut + 1]


def _single_path(trace: frozenset[str]) -> bool:
    groups = [path_group(p) for p in trace]
    return len(groups) == len(set(groups))
