"""Ground-set model shared by every mechanism: elements, bid profiles,
outcomes, payments, and the utility / welfare / revenue accounting."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

TOL = 1e-9


class BudgetExceededError(RuntimeError):
    """An enumeration budget was exceeded; refuse rather than grind."""


class OracleError(RuntimeError):
    """A feasibility or polymatroid oracle returned inconsistent answers."""


@dataclass(frozen=True, order=True)
class Element:
    """One auctioned element.  ``tie_rank`` gives the fixed total order used
    to break every bid tie, so identical runs are reproducible."""

    tie_rank: int
    id: str = field(compare=False)
    owner: int = field(compare=False)

    def __repr__(self) -> str:
        return f"Element({self.id!r}, owner={self.owner}, rank={self.tie_rank})"


def make_ground_set(specs: Sequence[tuple[str, int]]) -> tuple[Element, ...]:
    """Build elements from (id, owner) pairs; tie_rank = position in the list."""
    elements = tuple(
        Element(tie_rank=k, id=eid, owner=owner) for k, (eid, owner) in enumerate(specs)
    )
    validate_ground_set(elements)
    return elements


def validate_ground_set(elements: Sequence[Element]) -> None:
    ids = [e.id for e in elements]
    if len(set(ids)) != len(ids):
        raise ValueError("duplicate element ids in ground set")
    ranks = [e.tie_rank for e in elements]
    if len(set(ranks)) != len(ranks):
        raise ValueError("tie_rank values must be distinct")
    for e in elements:
        if e.owner < 0:
            raise ValueError(f"element {e.id} has negative owner index")


@dataclass(frozen=True)
class BidProfile:
    """Per-element bids, plus optional per-element capacities (only the
    capacitated polymatroid mechanism reads them)."""

    bids: Mapping[Element, float]
    capacities: Mapping[Element, float] | None = None

    def __post_init__(self):
        for e, b in self.bids.items():
            if b < 0:
                raise ValueError(f"negative bid {b} on {e.id}")
        if self.capacities is not None:
            for e, q in self.capacities.items():
                if q < 0:
                    raise ValueError(f"negative capacity {q} on {e.id}")

    def bid(self, element: Element) -> float:
        return self.bids[element]

    def replace(self, new_bids: Mapping[Element, float],
                new_caps: Mapping[Element, float] | None = None) -> "BidProfile":
        """Overlay bids (and capacities) for a subset of elements."""
        bids = dict(self.bids)
        bids.update(new_bids)
        caps = self.capacities
        if new_caps is not None:
            caps = dict(caps) if caps is not None else {}
            caps.update(new_caps)
        return BidProfile(bids, caps)


@dataclass(frozen=True)
class Outcome:
    """Result of one mechanism run.  Set mechanisms fill ``selected``;
    fractional mechanisms fill ``allocation``.  Payments are pay-your-bid."""

    payments: tuple[float, ...]
    selected: frozenset[Element] | None = None
    allocation: Mapping[Element, float] | None = None

    def player_selection(self, player: int) -> frozenset[Element]:
        assert self.selected is not None
        return frozenset(e for e in self.selected if e.owner == player)

    def player_allocation(self, player: int) -> dict[Element, float]:
        assert self.allocation is not None
        return {e: x for e, x in self.allocation.items() if e.owner == player}


def utility(outcome: Outcome, player: int, valuation) -> float:
    """Quasi-linear utility: value of own allocation minus own payment."""
    if not 0 <= player < len(outcome.payments):
        raise IndexError(f"player index {player} out of range")
    if outcome.selected is not None:
        value = valuation.value(outcome.player_selection(player))
    else:
        value = valuation.value(outcome.player_allocation(player))
    return value - outcome.payments[player]


def welfare(outcome: Outcome, valuations: Sequence) -> float:
    """Sum over players of the value of their own allocation."""
    total = 0.0
    for i, v in enumerate(valuations):
        if outcome.selected is not None:
            total += v.value(outcome.player_selection(i))
        else:
            total += v.value(outcome.player_allocation(i))
    return total


def revenue(outcome: Outcome) -> float:
    return float(sum(outcome.payments))
