"""Shared fixtures: the two figure instances and the cascade pair used all
over the suite."""
import pytest

from greedymech.core import BidProfile, make_ground_set
from greedymech.feasibility import GraphicalMatroid, MatchingConstraint
from greedymech.mechanisms import (GREEDY_MATCHING, GREEDY_MATROID, Instance,
                                   Mechanism)
from greedymech.polymatroid import CascadeOracle
from greedymech.valuations import AdditiveValuation


@pytest.fixture
def graphical_fixture():
    """Six edges on vertices a..d; graphical matroid.  Dashed edges (ab, ad,
    cd) carry the big values and bid 0; solid edges bid truthfully.  Greedy
    on the bids picks {ac, bc, bd}; the value-optimal forest is {ab, ad, cd}.
    tie_rank ordering puts cd before ac so the 15-valued tie resolves to the
    dashed forest."""
    elements = make_ground_set([
        ("ab", 0), ("ad", 1), ("cd", 2), ("ac", 3), ("bc", 4), ("bd", 5),
    ])
    edge_of = {
        elements[0]: ("a", "b"),
        elements[1]: ("a", "d"),
        elements[2]: ("c", "d"),
        elements[3]: ("a", "c"),
        elements[4]: ("b", "c"),
        elements[5]: ("b", "d"),
    }
    matroid = GraphicalMatroid(elements, edge_of)
    values = {"ab": 6.0, "ad": 5.0, "cd": 4.0, "ac": 4.0, "bc": 3.5, "bd": 3.2}
    valuations = tuple(
        AdditiveValuation({e: values[e.id]}) for e in elements
    )
    instance = Instance(elements, Mechanism(GREEDY_MATROID, matroid), valuations)
    bids = BidProfile({e: (0.0 if e.id in ("ab", "ad", "cd") else values[e.id])
                       for e in elements})
    return instance, bids, values


@pytest.fixture
def matching_fixture():
    """Bipartite edges aA..cD; matching constraint.  Player 0 owns aA and bD
    (dashed, bid 0); the other four edges bid truthfully.  Weights are tuned
    so that greedy on the bids picks {aB, bC, cD}, the value optimum is
    {aA, bD}, and under player 0's half-value swap deviation greedy picks aA,
    then bB, and drops bD."""
    elements = make_ground_set([
        ("aA", 0), ("bD", 0), ("aB", 1), ("bB", 2), ("bC", 3), ("cD", 4),
    ])
    edge_of = {
        elements[0]: ("a", "A"),
        elements[1]: ("b", "D"),
        elements[2]: ("a", "B"),
        elements[3]: ("b", "B"),
        elements[4]: ("b", "C"),
        elements[5]: ("c", "D"),
    }
    constraint = MatchingConstraint(elements, edge_of)
    values = {"aA": 8.0, "bD": 6.0, "aB": 3.5, "bB": 3.2, "bC": 2.8, "cD": 2.5}
    by_player: dict[int, dict] = {}
    for e in elements:
        by_player.setdefault(e.owner, {})[e] = values[e.id]
    valuations = tuple(AdditiveValuation(by_player[i]) for i in range(5))
    instance = Instance(elements, Mechanism(GREEDY_MATCHING, constraint), valuations)
    bids = BidProfile({e: (0.0 if e.owner == 0 else values[e.id])
                       for e in elements})
    return instance, bids, values


@pytest.fixture
def cascade_pair():
    """Two ads with continuation probability 0.5 each: f({1})=f({2})=0.5,
    f({1,2})=0.75."""
    elements = make_ground_set([("ad1", 0), ("ad2", 1)])
    oracle = CascadeOracle(elements, {elements[0]: 0.5, elements[1]: 0.5})
    return elements, oracle
