import numpy as np
import pytest

from greedymech.core import BidProfile, make_ground_set, revenue
from greedymech.feasibility import (MatchingConstraint, UniformMatroid,
                                    brute_force_opt, greedy_order)
from greedymech.mechanisms import (GREEDY_MATCHING, GREEDY_MATROID,
                                   OPTIMAL_ON_BIDS, POLYMATROID,
                                   POLYMATROID_CAPS, Mechanism, declared_welfare,
                                   run)
from greedymech.polymatroid import CascadeOracle


def test_single_item_first_price():
    els = make_ground_set([("item_p0", 0), ("item_p1", 1)])
    mech = Mechanism(GREEDY_MATROID, UniformMatroid(els, 1))
    out = run(mech, BidProfile({els[0]: 10.0, els[1]: 6.0}))
    assert out.selected == frozenset({els[0]})
    assert out.payments == (10.0, 0.0)


def test_matching_mechanism_fixture(matching_fixture):
    instance, bids, values = matching_fixture
    out = run(instance.mechanism, bids)
    assert {e.id for e in out.selected} == {"aB", "bC", "cD"}
    for e in out.selected:
        assert out.payments[e.owner] == pytest.approx(bids.bids[e])


def test_polymatroid_caps_mechanism(cascade_pair):
    els, oracle = cascade_pair
    mech = Mechanism(POLYMATROID_CAPS, oracle)
    profile = BidProfile({els[0]: 3.0, els[1]: 2.0},
                         {els[0]: 0.3, els[1]: 1.0})
    out = run(mech, profile)
    assert out.allocation[els[0]] == pytest.approx(0.3)
    assert out.allocation[els[1]] == pytest.approx(0.45)
    assert out.payments == pytest.approx((0.9, 0.9))
    with pytest.raises(ValueError):
        run(mech, BidProfile({els[0]: 3.0, els[1]: 2.0}))


def test_polymatroid_revenue_example(cascade_pair):
    els, oracle = cascade_pair
    mech = Mechanism(POLYMATROID, oracle)
    out = run(mech, BidProfile({els[0]: 3.0, els[1]: 2.0}))
    assert revenue(out) == pytest.approx(3 * 0.5 + 2 * 0.25)


def test_declared_welfare(graphical_fixture):
    instance, bids, values = graphical_fixture
    mech = instance.mechanism
    assert declared_welfare(mech, bids, frozenset()) == 0.0
    out = run(mech, bids)
    assert declared_welfare(mech, bids, out.selected) == pytest.approx(4 + 3.5 + 3.2)


def test_optimal_on_bids_maximizes_declared_welfare(matching_fixture):
    instance, bids, _ = matching_fixture
    constraint = instance.mechanism.feasibility
    mech = Mechanism(OPTIMAL_ON_BIDS, constraint.as_intersection())
    rng = np.random.default_rng(7)
    from greedymech.feasibility import iter_feasible_sets
    feasible = list(iter_feasible_sets(constraint))
    for _ in range(20):
        profile = BidProfile({e: float(rng.uniform(0, 8)) for e in instance.elements})
        out = run(mech, profile)
        best = declared_welfare(mech, profile, out.selected)
        for s in feasible:
            assert best >= declared_welfare(mech, profile, s) - 1e-9


def test_greedy_matroid_is_declared_welfare_optimal(graphical_fixture):
    instance, _, _ = graphical_fixture
    mech = instance.mechanism
    rng = np.random.default_rng(11)
    for _ in range(50):
        profile = BidProfile({e: float(rng.uniform(0, 8)) for e in instance.elements})
        out = run(mech, profile)
        got = declared_welfare(mech, profile, out.selected)
        best, _ = brute_force_opt(mech.feasibility, dict(profile.bids))
        assert got == pytest.approx(best, abs=1e-9)


def test_greedy_matching_half_of_declared_optimum(matching_fixture):
    instance, _, _ = matching_fixture
    mech = instance.mechanism
    rng = np.random.default_rng(13)
    for _ in range(50):
        profile = BidProfile({e: float(rng.uniform(0, 8)) for e in instance.elements})
        out = run(mech, profile)
        got = declared_welfare(mech, profile, out.selected)
        best, _ = brute_force_opt(mech.feasibility, dict(profile.bids))
        assert 2 * got >= best - 1e-9


def test_processing_order_stable_under_one_raise(graphical_fixture):
    instance, bids, _ = graphical_fixture
    base = dict(bids.bids)
    order_before = greedy_order(instance.elements, base)
    target = instance.elements[4]
    raised = dict(base)
    raised[target] = 7.5
    order_after = greedy_order(instance.elements, raised)
    assert [e for e in order_before if e is not target] == \
           [e for e in order_after if e is not target]


def test_variant_validation(cascade_pair):
    els, oracle = cascade_pair
    with pytest.raises(TypeError):
        Mechanism(GREEDY_MATROID, oracle)
    with pytest.raises(ValueError):
        Mechanism("second_price", oracle)
    mats = make_ground_set([("m", 0)])
    with pytest.raises(TypeError):
        Mechanism(GREEDY_MATCHING, UniformMatroid(mats, 1))
