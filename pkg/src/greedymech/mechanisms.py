"""The four pay-your-bid auctions: greedy on a matroid, greedy fractional on
a polymatroid (with or without declared caps), greedy on a matching, and
bid-optimal selection on a k-matroid intersection."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping

from .core import BidProfile, Element, Outcome, validate_ground_set
from .feasibility import (Feasibility, MatchingConstraint, Matroid,
                          MatroidIntersection, brute_force_opt, greedy_select)
from .polymatroid import PolymatroidOracle, polymatroid_greedy

GREEDY_MATROID = "greedy_matroid"
POLYMATROID = "polymatroid"
POLYMATROID_CAPS = "polymatroid_caps"
GREEDY_MATCHING = "greedy_matching"
OPTIMAL_ON_BIDS = "optimal_on_bids"

VARIANTS = (GREEDY_MATROID, POLYMATROID, POLYMATROID_CAPS,
            GREEDY_MATCHING, OPTIMAL_ON_BIDS)


@dataclass(frozen=True)
class Mechanism:
    variant: str
    feasibility: Feasibility | PolymatroidOracle

    def __post_init__(self):
        if self.variant not in VARIANTS:
            raise ValueError(f"unknown variant {self.variant!r}")
        f = self.feasibility
        if self.variant == GREEDY_MATROID and not isinstance(f, Matroid):
            raise TypeError("greedy_matroid needs a matroid")
        if self.variant == GREEDY_MATCHING and not isinstance(f, MatchingConstraint):
            raise TypeError("greedy_matching needs a matching constraint")
        if self.variant in (POLYMATROID, POLYMATROID_CAPS) and \
                not isinstance(f, PolymatroidOracle):
            raise TypeError(f"{self.variant} needs a polymatroid oracle")
        if self.variant == OPTIMAL_ON_BIDS and not isinstance(
                f, (Matroid, MatroidIntersection, MatchingConstraint)):
            raise TypeError("optimal_on_bids needs matroids or their intersection")

    @property
    def elements(self) -> tuple[Element, ...]:
        return self.feasibility.elements

    @property
    def fractional(self) -> bool:
        return self.variant in (POLYMATROID, POLYMATROID_CAPS)

    @property
    def intersection_k(self) -> int:
        """Number of intersected matroid constraints driving the smoothness
        parameters of the bid-optimal mechanism."""
        f = self.feasibility
        if isinstance(f, MatroidIntersection):
            return f.k
        if isinstance(f, MatchingConstraint):
            return 2
        return 1

    def n_players(self) -> int:
        return max(e.owner for e in self.elements) + 1

    def run(self, profile: BidProfile) -> Outcome:
        return run(self, profile)


def run(mechanism: Mechanism, profile: BidProfile) -> Outcome:
    """Allocate per the variant's algorithm and charge pay-your-bid."""
    elements = mechanism.elements
    missing = [e.id for e in elements if e not in profile.bids]
    if missing:
        raise ValueError(f"profile missing bids for {missing}")
    if mechanism.variant == POLYMATROID_CAPS and profile.capacities is None:
        raise ValueError("capacitated mechanism requires declared capacities")
    if not mechanism.fractional and profile.capacities is not None:
        raise ValueError(f"{mechanism.variant} does not accept capacities")

    n = mechanism.n_players()
    bids = profile.bids
    if mechanism.fractional:
        caps = profile.capacities if mechanism.variant == POLYMATROID_CAPS else None
        x = polymatroid_greedy(mechanism.feasibility, bids, caps)
        payments = [0.0] * n
        for e, amount in x.items():
            payments[e.owner] += bids[e] * amount
        return Outcome(payments=tuple(payments), allocation=x)

    if mechanism.variant == OPTIMAL_ON_BIDS:
        _, selected = brute_force_opt(mechanism.feasibility, bids)
    else:
        selected = greedy_select(mechanism.feasibility, bids)
    payments = [0.0] * n
    for e in selected:
        payments[e.owner] += bids[e]
    return Outcome(payments=tuple(payments), selected=selected)


def declared_welfare(mechanism: Mechanism, profile: BidProfile,
                     set_or_alloc) -> float:
    """Bid-weight of an allocation: sum of bids over a set, or the
    bid-weighted mass of a fractional allocation."""
    if isinstance(set_or_alloc, Mapping):
        return sum(profile.bids[e] * x for e, x in set_or_alloc.items())
    return sum(profile.bids[e] for e in set_or_alloc)


@dataclass(frozen=True)
class Instance:
    """A mechanism bound to a ground set and one valuation per player."""

    elements: tuple[Element, ...]
    mechanism: Mechanism
    valuations: tuple

    def __post_init__(self):
        validate_ground_set(self.elements)
        if self.mechanism.elements != self.elements:
            raise ValueError("mechanism is bound to a different ground set")
        n = self.n_players
        if len(self.valuations) != n:
            raise ValueError(f"need exactly {n} valuations")
        for i, v in enumerate(self.valuations):
            owned = frozenset(e for e in self.elements if e.owner == i)
            if v.elements != owned:
                raise ValueError(
                    f"valuation of player {i} must cover exactly their elements")

    @property
    def n_players(self) -> int:
        return max(e.owner for e in self.elements) + 1

    def owned_by(self, player: int) -> tuple[Element, ...]:
        return tuple(e for e in self.elements if e.owner == player)
