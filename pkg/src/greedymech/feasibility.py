"""Set-system feasibility oracles (matroids, intersections, matchings) and
the pure combinatorial algorithms the mechanisms wrap: greedy max-weight
selection and brute-force welfare maximization."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

from .core import BudgetExceededError, Element, OracleError, TOL

BRUTE_FORCE_MAX_ELEMENTS = 20


class Feasibility:
    """A downward-closed family of feasible subsets of a ground set."""

    elements: tuple[Element, ...]

    def checker(self) -> "IncrementalChecker":
        raise NotImplementedError

    def is_feasible(self, subset: Iterable[Element]) -> bool:
        chk = self.checker()
        for e in subset:
            if not chk.can_add(e):
                return False
            chk.add(e)
        return True


class IncrementalChecker:
    """Stateful acceptor: ``can_add`` asks, ``add`` commits."""

    def can_add(self, element: Element) -> bool:
        raise NotImplementedError

    def add(self, element: Element) -> None:
        raise NotImplementedError


class Matroid(Feasibility):
    """Marker base class: subclasses promise the matroid axioms."""


# ---------------------------------------------------------------------------
# concrete matroids


@dataclass(frozen=True)
class UniformMatroid(Matroid):
    elements: tuple[Element, ...]
    rank: int

    def checker(self):
        return _UniformChecker(self.rank)


class _UniformChecker(IncrementalChecker):
    def __init__(self, rank):
        self.rank = rank
        self.count = 0

    def can_add(self, element):
        return self.count < self.rank

    def add(self, element):
        self.count += 1


@dataclass(frozen=True)
class PartitionMatroid(Matroid):
    """Blocks with per-block capacities; an element belongs to one block."""

    elements: tuple[Element, ...]
    block_of: Mapping[Element, str]
    capacity: Mapping[str, int]

    def __post_init__(self):
        for e in self.elements:
            if e not in self.block_of:
                raise ValueError(f"element {e.id} has no block")
            if self.block_of[e] not in self.capacity:
                raise ValueError(f"block {self.block_of[e]} has no capacity")

    def checker(self):
        return _PartitionChecker(self.block_of, self.capacity)


class _PartitionChecker(IncrementalChecker):
    def __init__(self, block_of, capacity):
        self.block_of = block_of
        self.capacity = capacity
        self.used: dict[str, int] = {}

    def can_add(self, element):
        b = self.block_of[element]
        return self.used.get(b, 0) < self.capacity[b]

    def add(self, element):
        b = self.block_of[element]
        self.used[b] = self.used.get(b, 0) + 1


@dataclass(frozen=True)
class GraphicalMatroid(Matroid):
    """Edges of a multigraph; independent = acyclic edge set."""

    elements: tuple[Element, ...]
    edge_of: Mapping[Element, tuple[str, str]]

    def __post_init__(self):
        for e in self.elements:
            if e not in self.edge_of:
                raise ValueError(f"element {e.id} has no edge")

    def checker(self):
        return _ForestChecker(self.edge_of)


class _ForestChecker(IncrementalChecker):
    def __init__(self, edge_of):
        self.edge_of = edge_of
        self.parent: dict[str, str] = {}

    def _find(self, v):
        root = v
        while self.parent.get(root, root) != root:
            root = self.parent[root]
        while self.parent.get(v, v) != v:
            self.parent[v], v = root, self.parent[v]
        return root

    def can_add(self, element):
        u, v = self.edge_of[element]
        if u == v:
            return False
        return self._find(u) != self._find(v)

    def add(self, element):
        u, v = self.edge_of[element]
        ru, rv = self._find(u), self._find(v)
        if ru == rv:
            raise OracleError(f"adding {element.id} would close a cycle")
        self.parent[ru] = rv


@dataclass(frozen=True)
class TransversalMatroid(Matroid):
    """Independent = the subset admits a system of distinct representatives
    among its adjacent right-side vertices."""

    elements: tuple[Element, ...]
    adjacency: Mapping[Element, frozenset[str]]

    def checker(self):
        return _TransversalChecker(self.adjacency)


class _TransversalChecker(IncrementalChecker):
    def __init__(self, adjacency):
        self.adjacency = adjacency
        self.match_of: dict[str, Element] = {}  # right vertex -> element
        self.members: list[Element] = []

    def _augment(self, element, visited, commit):
        for v in sorted(self.adjacency[element]):
            if v in visited:
                continue
            visited.add(v)
            holder = self.match_of.get(v)
            if holder is None or self._augment(holder, visited, commit):
                if commit:
                    self.match_of[v] = element
                return True
        return False

    def can_add(self, element):
        return self._augment(element, set(), commit=False)

    def add(self, element):
        if not self._augment(element, set(), commit=True):
            raise OracleError(f"{element.id} not matchable")
        self.members.append(element)


@dataclass(frozen=True)
class ExplicitMatroid(Matroid):
    """Stored downward-closed family; validated against the matroid axioms
    at construction (exhaustive, so keep the ground set small)."""

    elements: tuple[Element, ...]
    family: frozenset[frozenset[Element]]

    def __post_init__(self):
        check_matroid_axioms(self.elements, self.family)

    def checker(self):
        return _ExplicitChecker(self.family)


class _ExplicitChecker(IncrementalChecker):
    def __init__(self, family):
        self.family = family
        self.current: frozenset[Element] = frozenset()

    def can_add(self, element):
        return (self.current | {element}) in self.family

    def add(self, element):
        self.current = self.current | {element}


def check_matroid_axioms(elements: Sequence[Element],
                         family: frozenset[frozenset[Element]]) -> None:
    """Empty-set membership, downward closure, exchange axiom."""
    if len(elements) > 12:
        raise BudgetExceededError("axiom check is exhaustive; ground set > 12")
    if frozenset() not in family:
        raise OracleError("family does not contain the empty set")
    for s in family:
        for e in s:
            if (s - {e}) not in family:
                raise OracleError(f"not downward closed at {sorted(x.id for x in s)}")
    for a in family:
        for b in family:
            if len(a) > len(b):
                if not any((b | {e}) in family for e in a - b):
                    raise OracleError(
                        "exchange axiom fails for "
                        f"{sorted(x.id for x in a)} / {sorted(x.id for x in b)}")


# ---------------------------------------------------------------------------
# intersections and matchings


@dataclass(frozen=True)
class MatroidIntersection(Feasibility):
    matroids: tuple[Matroid, ...]

    def __post_init__(self):
        if not self.matroids:
            raise ValueError("need k >= 1 matroids")

    @property
    def elements(self):
        return self.matroids[0].elements

    @property
    def k(self) -> int:
        return len(self.matroids)

    def checker(self):
        return _IntersectionChecker([m.checker() for m in self.matroids])


class _IntersectionChecker(IncrementalChecker):
    def __init__(self, checkers):
        self.checkers = checkers

    def can_add(self, element):
        return all(c.can_add(element) for c in self.checkers)

    def add(self, element):
        for c in self.checkers:
            c.add(element)


@dataclass(frozen=True)
class MatchingConstraint(Feasibility):
    """Each element is an edge (u, v) of a bipartite graph; feasible sets are
    matchings.  Equivalent to intersecting the two endpoint partition matroids."""

    elements: tuple[Element, ...]
    edge_of: Mapping[Element, tuple[str, str]]

    def left(self, e: Element) -> str:
        return self.edge_of[e][0]

    def right(self, e: Element) -> str:
        return self.edge_of[e][1]

    def checker(self):
        return _MatchingChecker(self.edge_of)

    def as_intersection(self) -> MatroidIntersection:
        lefts = {self.left(e) for e in self.elements}
        rights = {self.right(e) for e in self.elements}
        m1 = PartitionMatroid(self.elements, {e: self.left(e) for e in self.elements},
                              {v: 1 for v in lefts})
        m2 = PartitionMatroid(self.elements, {e: self.right(e) for e in self.elements},
                              {v: 1 for v in rights})
        return MatroidIntersection((m1, m2))


class _MatchingChecker(IncrementalChecker):
    def __init__(self, edge_of):
        self.edge_of = edge_of
        self.used: set[str] = set()

    def can_add(self, element):
        u, v = self.edge_of[element]
        return u not in self.used and v not in self.used

    def add(self, element):
        self.used.update(self.edge_of[element])


# ---------------------------------------------------------------------------
# algorithms


def greedy_order(elements: Sequence[Element], weights: Mapping[Element, float]
                 ) -> list[Element]:
    """Decreasing weight, ties broken by tie_rank.  Zero-weight elements are
    still considered, after everything positive."""
    return sorted(elements, key=lambda e: (-weights[e], e.tie_rank))


def greedy_select(feasibility: Feasibility, weights: Mapping[Element, float]
                  ) -> frozenset[Element]:
    """Run the greedy algorithm over any downward-closed feasibility oracle."""
    for e, w in weights.items():
        if w < 0:
            raise ValueError(f"negative weight on {e.id}")
    chk = feasibility.checker()
    picked = []
    for e in greedy_order(feasibility.elements, weights):
        if chk.can_add(e):
            chk.add(e)
            picked.append(e)
    return frozenset(picked)


def greedy_max_weight(matroid: Matroid, weights: Mapping[Element, float]
                      ) -> frozenset[Element]:
    """Greedy on a matroid; exact for max-weight independent set."""
    if not isinstance(matroid, Matroid):
        raise TypeError("greedy_max_weight needs a matroid")
    return greedy_select(matroid, weights)


def greedy_matching(constraint: MatchingConstraint,
                    weights: Mapping[Element, float]) -> frozenset[Element]:
    """Greedy on a matching constraint; 2-approximate for max weight."""
    if not isinstance(constraint, MatchingConstraint):
        raise TypeError("greedy_matching needs a matching constraint")
    return greedy_select(constraint, weights)


def greedy_with_blockers(feasibility: Feasibility,
                         weights: Mapping[Element, float]
                         ) -> tuple[frozenset[Element], dict[Element, list[Element]]]:
    """Greedy run that also records, for each rejected element, the already
    selected elements in pairwise conflict with it (for matchings: the
    selected edges sharing one of its vertices), in selection order."""
    chk = feasibility.checker()
    picked: list[Element] = []
    blockers: dict[Element, list[Element]] = {}
    for e in greedy_order(feasibility.elements, weights):
        if chk.can_add(e):
            chk.add(e)
            picked.append(e)
        else:
            blockers[e] = [s for s in picked if not feasibility.is_feasible((s, e))]
    return frozenset(picked), blockers


def iter_feasible_sets(feasibility: Feasibility,
                       max_sets: int | None = None):
    """DFS over all feasible subsets (downward closure prunes branches)."""
    elements = sorted(feasibility.elements, key=lambda e: e.tie_rank)
    count = 0

    def rec(idx: int, current: list[Element]):
        nonlocal count
        if idx == len(elements):
            count += 1
            if max_sets is not None and count > max_sets:
                raise BudgetExceededError(f"more than {max_sets} feasible sets")
            yield frozenset(current)
            return
        yield from rec(idx + 1, current)
        e = elements[idx]
        if feasibility.is_feasible(current + [e]):
            current.append(e)
            yield from rec(idx + 1, current)
            current.pop()

    yield from rec(0, [])


def _set_tie_key(subset: Iterable[Element]) -> tuple[int, ...]:
    return tuple(sorted(e.tie_rank for e in subset))


def brute_force_opt(feasibility: Feasibility, valuations_or_weights
                    ) -> tuple[float, frozenset[Element]]:
    """Exact welfare maximizer by enumeration.  Accepts either a mapping
    element -> weight or a sequence of per-player set valuations.  Ties go to
    the lexicographically smallest set in tie_rank order."""
    elements = feasibility.elements
    if len(elements) > BRUTE_FORCE_MAX_ELEMENTS:
        raise BudgetExceededError(
            f"{len(elements)} elements exceed the enumeration budget "
            f"of {BRUTE_FORCE_MAX_ELEMENTS}")

    if isinstance(valuations_or_weights, Mapping):
        weights = valuations_or_weights

        def value_of(subset):
            return sum(weights[e] for e in subset)
    else:
        valuations = list(valuations_or_weights)

        def value_of(subset):
            return sum(v.value(frozenset(e for e in subset if e.owner == i))
                       for i, v in enumerate(valuations))

    best_value = 0.0
    best_set = frozenset()
    best_key = _set_tie_key(best_set)
    for subset in iter_feasible_sets(feasibility):
        val = value_of(subset)
        key = _set_tie_key(subset)
        if val > best_value + TOL or (abs(val - best_value) <= TOL and key < best_key):
            best_value, best_set, best_key = val, subset, key
    return best_value, best_set


def max_weight_matching_value(constraint: MatchingConstraint,
                              weights: Mapping[Element, float]) -> float:
    value, _ = brute_force_opt(constraint, weights)
    return value
