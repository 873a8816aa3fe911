import itertools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from greedymech.core import BudgetExceededError, make_ground_set
from greedymech.polymatroid import (CascadeOracle, ExplicitPolymatroid,
                                    KeywordOracle, allocation_is_feasible,
                                    discretize_polymatroid,
                                    discretized_allocation, polymatroid_greedy,
                                    tight_increase)


def test_constant_capacity_single_element():
    els = make_ground_set([("g", 0)])
    oracle = ExplicitPolymatroid.from_function(
        els, lambda s: 0.0 if not s else 3.0)
    x = polymatroid_greedy(oracle, {els[0]: 1.0})
    assert x[els[0]] == pytest.approx(3.0)


def test_cascade_greedy(cascade_pair):
    els, oracle = cascade_pair
    assert oracle.value(frozenset({els[0]})) == pytest.approx(0.5)
    assert oracle.value(frozenset(els)) == pytest.approx(0.75)
    x = polymatroid_greedy(oracle, {els[0]: 3.0, els[1]: 2.0})
    assert x[els[0]] == pytest.approx(0.5)
    assert x[els[1]] == pytest.approx(0.25)


def test_cascade_greedy_with_caps(cascade_pair):
    els, oracle = cascade_pair
    x = polymatroid_greedy(oracle, {els[0]: 3.0, els[1]: 2.0},
                           caps={els[0]: 0.3, els[1]: 1.0})
    assert x[els[0]] == pytest.approx(0.3)
    assert x[els[1]] == pytest.approx(0.45)


def test_tight_increase_cases(cascade_pair):
    els, oracle = cascade_pair
    assert tight_increase(oracle, {e: 0.0 for e in els}, els[0]) == pytest.approx(0.5)
    assert tight_increase(oracle, {els[0]: 0.5, els[1]: 0.0},
                          els[1]) == pytest.approx(0.25)
    assert tight_increase(oracle, {e: 0.0 for e in els}, els[0], cap=0.0) == 0.0


def test_oracle_validation(cascade_pair):
    _, oracle = cascade_pair
    oracle.validate()
    els = make_ground_set([("a", 0), ("b", 1)])
    a, b = els
    bad = ExplicitPolymatroid(els, {
        frozenset(): 0.0, frozenset({a}): 1.0, frozenset({b}): 1.0,
        frozenset({a, b}): 3.0})  # supermodular
    with pytest.raises(Exception):
        bad.validate()


def test_keyword_oracle_prefix_sums():
    els = make_ground_set([("p0kw0", 0), ("p1kw0", 1)])
    oracle = KeywordOracle(els, {els[0]: "kw0", els[1]: "kw0"},
                           {"kw0": (10.0, 4.0)})
    oracle.validate()
    x = polymatroid_greedy(oracle, {els[0]: 3.0, els[1]: 2.0})
    assert x[els[0]] == pytest.approx(10.0)
    assert x[els[1]] == pytest.approx(4.0)


@settings(max_examples=50, deadline=None)
@given(st.data())
def test_greedy_output_always_feasible(data):
    els = make_ground_set([(f"g{i}", i) for i in range(3)])
    caps = {e: data.draw(st.floats(0.125, 2.0, allow_nan=False, width=32))
            for e in els}

    def f(s):
        # coverage-style submodular function
        return sum(caps[e] for e in s) ** 0.5 if s else 0.0

    oracle = ExplicitPolymatroid.from_function(els, f)
    oracle.validate()
    bids = {e: data.draw(st.floats(0, 5, allow_nan=False, width=32)) for e in els}
    x = polymatroid_greedy(oracle, bids)
    assert allocation_is_feasible(oracle, x)


def test_discretize_copy_counts(cascade_pair):
    els, oracle = cascade_pair
    single = make_ground_set([("t", 0)])
    unit = ExplicitPolymatroid.from_function(
        single, lambda s: 1.0 if s else 0.0)
    d = discretize_polymatroid(unit, 0.5)
    assert len(d.elements) == 2

    d2 = discretize_polymatroid(oracle, 0.25)
    assert len(d2.copies_of(els[0])) == 2
    assert len(d2.copies_of(els[1])) == 2
    best = max(len(s) for s in _independent_sets(d2))
    assert best == 3  # 3 copies * 0.25 = f({1,2}) = 0.75


def _independent_sets(matroid):
    out = []
    for r in range(len(matroid.elements) + 1):
        for combo in itertools.combinations(matroid.elements, r):
            if matroid.is_feasible(combo):
                out.append(combo)
    return out


def test_discretized_matroid_axioms(cascade_pair):
    """The copy family satisfies the matroid axioms (tiny instance, checked
    exhaustively)."""
    els, oracle = cascade_pair
    d = discretize_polymatroid(oracle, 0.25)
    family = frozenset(frozenset(s) for s in _independent_sets(d))
    from greedymech.feasibility import check_matroid_axioms
    check_matroid_axioms(d.elements, family)


def test_discretization_converges(cascade_pair):
    els, oracle = cascade_pair
    bids = {els[0]: 3.0, els[1]: 2.0}
    exact = polymatroid_greedy(oracle, bids)
    errors = []
    for delta in (0.25, 0.125, 0.0625):
        approx = discretized_allocation(discretize_polymatroid(oracle, delta), bids)
        err = max(abs(approx[e] - exact[e]) for e in els)
        assert err <= delta * len(els) + 1e-9
        errors.append(err)
    assert errors[0] >= errors[1] >= errors[2]


def test_discretization_blowup_guard():
    els = make_ground_set([("t", 0)])
    unit = ExplicitPolymatroid.from_function(els, lambda s: 1.0 if s else 0.0)
    with pytest.raises(BudgetExceededError):
        discretize_polymatroid(unit, 1e-4)
