"""Valuation classes: additive and XOS set functions for the set mechanisms,
and capped-linear / max-of-capped / linear vector functions for the
fractional ones."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

from .core import Element


@dataclass(frozen=True)
class AdditiveValuation:
    weights: Mapping[Element, float]

    def __post_init__(self):
        if any(w < 0 for w in self.weights.values()):
            raise ValueError("additive weights must be non-negative")

    def value(self, subset: Iterable[Element]) -> float:
        return sum(self.weights.get(e, 0.0) for e in subset)

    @property
    def elements(self):
        return frozenset(self.weights)


@dataclass(frozen=True)
class XOSValuation:
    """Max over additive clauses (fractionally subadditive)."""

    clauses: tuple[AdditiveValuation, ...]

    def __post_init__(self):
        if not self.clauses:
            raise ValueError("XOS valuation needs at least one clause")

    def value(self, subset: Iterable[Element]) -> float:
        s = frozenset(subset)
        return max(c.value(s) for c in self.clauses)

    def maximizing_clause(self, subset: Iterable[Element]) -> int:
        """Index of the clause achieving the value; lowest index on ties."""
        s = frozenset(subset)
        best_idx, best_val = 0, self.clauses[0].value(s)
        for idx, c in enumerate(self.clauses[1:], start=1):
            v = c.value(s)
            if v > best_val:
                best_idx, best_val = idx, v
        return best_idx

    @property
    def elements(self):
        out: set[Element] = set()
        for c in self.clauses:
            out.update(c.weights)
        return frozenset(out)


@dataclass(frozen=True)
class LinearValuation:
    """v(x) = sum of rate * amount; linear across elements, homogeneous in
    each."""

    rates: Mapping[Element, float]

    def __post_init__(self):
        if any(r < 0 for r in self.rates.values()):
            raise ValueError("rates must be non-negative")

    def value(self, allocation: Mapping[Element, float]) -> float:
        return sum(self.rates.get(e, 0.0) * x for e, x in allocation.items())

    @property
    def elements(self):
        return frozenset(self.rates)


@dataclass(frozen=True)
class CappedLinearValuation:
    """v(x) = sum of rate * min(amount, cap): concave, monotone, zero at
    zero."""

    rates: Mapping[Element, float]
    caps: Mapping[Element, float]

    def __post_init__(self):
        if set(self.rates) != set(self.caps):
            raise ValueError("rates and caps must cover the same elements")
        if any(r < 0 for r in self.rates.values()):
            raise ValueError("rates must be non-negative")
        if any(q < 0 for q in self.caps.values()):
            raise ValueError("caps must be non-negative")

    def value(self, allocation: Mapping[Element, float]) -> float:
        return sum(self.rates[e] * min(x, self.caps[e])
                   for e, x in allocation.items() if e in self.rates)

    @property
    def elements(self):
        return frozenset(self.rates)


@dataclass(frozen=True)
class MaxOfCappedValuation:
    """Max over capped-linear clauses; the normal form of a monotone
    lattice-submodular valuation over the allocation vector."""

    clauses: tuple[CappedLinearValuation, ...]

    def __post_init__(self):
        if not self.clauses:
            raise ValueError("need at least one clause")

    def value(self, allocation: Mapping[Element, float]) -> float:
        return max(c.value(allocation) for c in self.clauses)

    def maximizing_clause(self, allocation: Mapping[Element, float]) -> int:
        best_idx, best_val = 0, self.clauses[0].value(allocation)
        for idx, c in enumerate(self.clauses[1:], start=1):
            v = c.value(allocation)
            if v > best_val:
                best_idx, best_val = idx, v
        return best_idx

    @property
    def elements(self):
        out: set[Element] = set()
        for c in self.clauses:
            out.update(c.rates)
        return frozenset(out)


SetValuation = AdditiveValuation | XOSValuation
VectorValuation = LinearValuation | CappedLinearValuation | MaxOfCappedValuation


def evaluate(valuation, allocation) -> float:
    """Uniform entry point over all valuation classes."""
    return valuation.value(allocation)


def max_marginal_weight(valuation) -> float:
    """Largest per-element weight/rate appearing anywhere in the valuation;
    used to size bid grids."""
    if isinstance(valuation, AdditiveValuation):
        return max(valuation.weights.values(), default=0.0)
    if isinstance(valuation, XOSValuation):
        return max((max_marginal_weight(c) for c in valuation.clauses), default=0.0)
    if isinstance(valuation, (LinearValuation,)):
        return max(valuation.rates.values(), default=0.0)
    if isinstance(valuation, CappedLinearValuation):
        return max(valuation.rates.values(), default=0.0)
    if isinstance(valuation, MaxOfCappedValuation):
        return max((max_marginal_weight(c) for c in valuation.clauses), default=0.0)
    raise TypeError(f"unknown valuation {type(valuation).__name__}")
