"""Polymatroid oracles (explicit table, cascade closed form, keyword prefix
sums), the greedy fractional allocator with optional per-element caps, and
the copy-discretization that turns a polymatroid into a matroid."""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from .core import BudgetExceededError, Element, OracleError, TOL
from .feasibility import Matroid, IncrementalChecker

DISCRETIZATION_MAX_COPIES = 200


class PolymatroidOracle:
    """Monotone submodular f with f(empty)=0; allocations x must satisfy
    sum(x over S) <= f(S) for every S."""

    elements: tuple[Element, ...]

    def value(self, subset: frozenset[Element]) -> float:
        raise NotImplementedError

    def support_for(self, element: Element,
                    support: Sequence[Element]) -> Sequence[Element]:
        """Elements that can matter when minimizing slack over sets
        containing ``element``.  Separable oracles narrow this."""
        return support

    def validate(self) -> None:
        """Exhaustive f(empty)=0 / monotonicity / submodularity check."""
        if len(self.elements) > 12:
            raise BudgetExceededError("oracle validation is exhaustive; > 12 elements")
        if abs(self.value(frozenset())) > TOL:
            raise OracleError("f(empty set) != 0")
        subsets = [frozenset(c) for r in range(len(self.elements) + 1)
                   for c in itertools.combinations(self.elements, r)]
        vals = {s: self.value(s) for s in subsets}
        for s in subsets:
            for e in self.elements:
                if e not in s and vals[s | {e}] < vals[s] - TOL:
                    raise OracleError("f is not monotone")
        for a in subsets:
            for b in subsets:
                if vals[a] + vals[b] < vals[a | b] + vals[a & b] - TOL:
                    raise OracleError("f is not submodular")


@dataclass(frozen=True)
class ExplicitPolymatroid(PolymatroidOracle):
    elements: tuple[Element, ...]
    table: Mapping[frozenset[Element], float]

    def __post_init__(self):
        if len(self.elements) > 20:
            raise BudgetExceededError("explicit oracle limited to 20 elements")
        n = len(self.elements)
        if len(self.table) != 2 ** n:
            raise ValueError("table must cover every subset")

    def value(self, subset):
        return self.table[frozenset(subset)]

    @classmethod
    def from_function(cls, elements, fn) -> "ExplicitPolymatroid":
        subsets = [frozenset(c) for r in range(len(elements) + 1)
                   for c in itertools.combinations(elements, r)]
        return cls(tuple(elements), {s: float(fn(s)) for s in subsets})


@dataclass(frozen=True)
class CascadeOracle(PolymatroidOracle):
    """f(S) = 1 - prod(q_t for t in S): the probability a top-down scan with
    continuation probabilities q terminates inside S when S sits on top."""

    elements: tuple[Element, ...]
    continuation: Mapping[Element, float]

    def __post_init__(self):
        for e in self.elements:
            q = self.continuation[e]
            if not 0.0 <= q < 1.0:
                raise ValueError(f"continuation probability of {e.id} must be in [0,1)")

    def value(self, subset):
        prod = 1.0
        for e in subset:
            prod *= self.continuation[e]
        return 1.0 - prod


@dataclass(frozen=True)
class KeywordOracle(PolymatroidOracle):
    """Per-keyword sorted slot clicks; f(S) = sum over keywords of the top
    min(|S in keyword|, #slots) click counts."""

    elements: tuple[Element, ...]
    keyword_of: Mapping[Element, str]
    slot_clicks: Mapping[str, tuple[float, ...]]

    def __post_init__(self):
        for kw, clicks in self.slot_clicks.items():
            if any(clicks[i] < clicks[i + 1] for i in range(len(clicks) - 1)):
                raise ValueError(f"slot clicks for keyword {kw} must be non-increasing")
            if any(c < 0 for c in clicks):
                raise ValueError(f"negative clicks for keyword {kw}")

    def value(self, subset):
        counts: dict[str, int] = {}
        for e in subset:
            kw = self.keyword_of[e]
            counts[kw] = counts.get(kw, 0) + 1
        total = 0.0
        for kw, c in counts.items():
            clicks = self.slot_clicks[kw]
            total += sum(clicks[: min(c, len(clicks))])
        return total

    def support_for(self, element, support):
        kw = self.keyword_of[element]
        return [e for e in support if self.keyword_of[e] == kw]


def tight_increase(oracle: PolymatroidOracle, x: Mapping[Element, float],
                   element: Element, cap: float = math.inf) -> float:
    """Largest feasible increase of x[element]: min over sets S containing the
    element of f(S) - x(S), clamped by the cap.  Only elements already holding
    allocation can shrink the minimum (f is monotone), so the enumeration runs
    over the support of x."""
    support = [e for e in oracle.elements if e is not element and x.get(e, 0.0) > 0.0]
    support = oracle.support_for(element, support)
    best = math.inf
    for r in range(len(support) + 1):
        for combo in itertools.combinations(support, r):
            s = frozenset(combo) | {element}
            slack = oracle.value(s) - sum(x.get(e, 0.0) for e in s)
            if slack < best:
                best = slack
    if best < -TOL:
        raise OracleError(
            f"negative slack {best} at {element.id}: allocation infeasible "
            "(non-submodular oracle or corrupted state)")
    return max(0.0, min(best, cap - x.get(element, 0.0)))


def polymatroid_greedy(oracle: PolymatroidOracle,
                       bids: Mapping[Element, float],
                       caps: Mapping[Element, float] | None = None
                       ) -> dict[Element, float]:
    """Process elements in decreasing bid order (tie_rank ties) and give each
    its maximal feasible increase, optionally clamped at its cap."""
    for e, b in bids.items():
        if b < 0:
            raise ValueError(f"negative bid on {e.id}")
    if caps is not None:
        for e, q in caps.items():
            if q < 0:
                raise ValueError(f"negative cap on {e.id}")
    order = sorted(oracle.elements, key=lambda e: (-bids[e], e.tie_rank))
    x: dict[Element, float] = {e: 0.0 for e in oracle.elements}
    for e in order:
        cap = math.inf if caps is None else caps.get(e, math.inf)
        x[e] = tight_increase(oracle, x, e, cap)
    return x


def allocation_is_feasible(oracle: PolymatroidOracle,
                           x: Mapping[Element, float]) -> bool:
    """Exhaustive check of every polymatroid constraint."""
    elems = oracle.elements
    for r in range(len(elems) + 1):
        for combo in itertools.combinations(elems, r):
            s = frozenset(combo)
            if sum(x.get(e, 0.0) for e in s) > oracle.value(s) + TOL:
                return False
    return True


def polymatroid_opt(oracle: PolymatroidOracle, valuations) -> float:
    """Welfare-optimal value over the polymatroid.  Linear valuations reduce
    to greedy on the true rates; capped-linear ones to greedy with the true
    caps (a box truncation of a polymatroid is again a polymatroid); max-of-
    capped valuations are solved by enumerating clause choices."""
    from .valuations import (CappedLinearValuation, LinearValuation,
                             MaxOfCappedValuation)

    clause_lists = []
    for v in valuations:
        if isinstance(v, MaxOfCappedValuation):
            clause_lists.append(list(v.clauses))
        elif isinstance(v, (CappedLinearValuation, LinearValuation)):
            clause_lists.append([v])
        else:
            raise TypeError(f"unsupported valuation {type(v).__name__}")

    best = 0.0
    for choice in itertools.product(*clause_lists):
        rates: dict[Element, float] = {e: 0.0 for e in oracle.elements}
        caps: dict[Element, float] = {}
        for v in choice:
            if isinstance(v, CappedLinearValuation):
                for e in v.rates:
                    rates[e] = v.rates[e]
                    caps[e] = v.caps[e]
            else:
                for e in v.rates:
                    rates[e] = v.rates[e]
        x = polymatroid_greedy(oracle, rates, caps if caps else None)
        total = sum(v.value({e: x[e] for e in x if e.owner == i})
                    for i, v in enumerate(choice))
        best = max(best, total)
    return best


# ---------------------------------------------------------------------------
# discretization


@dataclass(frozen=True)
class DiscretizedPolymatroid(Matroid):
    """Matroid over duplicated elements: a multiset of copies is independent
    iff, for every subset A of the original ground set, delta times the number
    of copies drawn from A stays within f(A)."""

    elements: tuple[Element, ...]
    oracle: PolymatroidOracle
    delta: float
    original_of: Mapping[Element, Element]

    def checker(self):
        return _DiscretizedChecker(self)

    def copies_of(self, original: Element) -> list[Element]:
        return [c for c in self.elements if self.original_of[c] is original]


class _DiscretizedChecker(IncrementalChecker):
    def __init__(self, matroid: DiscretizedPolymatroid):
        self.m = matroid
        self.counts: dict[Element, int] = {e: 0 for e in matroid.oracle.elements}
        originals = matroid.oracle.elements
        self.subsets = [frozenset(c) for r in range(1, len(originals) + 1)
                        for c in itertools.combinations(originals, r)]
        self.values = {s: matroid.oracle.value(s) for s in self.subsets}

    def can_add(self, element):
        orig = self.m.original_of[element]
        delta = self.m.delta
        for s in self.subsets:
            if orig in s:
                load = sum(self.counts[e] for e in s) + 1
                if load * delta > self.values[s] + TOL:
                    return False
        return True

    def add(self, element):
        self.counts[self.m.original_of[element]] += 1


def discretize_polymatroid(oracle: PolymatroidOracle, delta: float
                           ) -> DiscretizedPolymatroid:
    """Duplicate each element floor(f({t})/delta) times; greedy over the copy
    matroid with per-copy weight b_t*delta approaches the fractional greedy
    allocation as delta shrinks."""
    if delta <= 0:
        raise ValueError("delta must be positive")
    copies: list[Element] = []
    original_of: dict[Element, Element] = {}
    rank = 0
    for t in sorted(oracle.elements, key=lambda e: e.tie_rank):
        n_copies = int(math.floor(oracle.value(frozenset({t})) / delta + TOL))
        for k in range(n_copies):
            c = Element(tie_rank=rank, id=f"{t.id}#{k}", owner=t.owner)
            rank += 1
            copies.append(c)
            original_of[c] = t
    if len(copies) > DISCRETIZATION_MAX_COPIES:
        raise BudgetExceededError(
            f"{len(copies)} copies exceed the {DISCRETIZATION_MAX_COPIES} guard")
    return DiscretizedPolymatroid(tuple(copies), oracle, delta, original_of)


def discretized_allocation(matroid: DiscretizedPolymatroid,
                           bids: Mapping[Element, float]) -> dict[Element, float]:
    """Run greedy on the copies with weight b_t*delta and read the fractional
    allocation back off the selected copy counts."""
    from .feasibility import greedy_max_weight

    copy_bids = {c: bids[matroid.original_of[c]] * matroid.delta
                 for c in matroid.elements}
    selected = greedy_max_weight(matroid, copy_bids)
    x = {t: 0.0 for t in matroid.oracle.elements}
    for c in selected:
        x[matroid.original_of[c]] += matroid.delta
    return x
