"""Discretized game solving on bid grids: exhaustive epsilon-pure-Nash
enumeration, best-response dynamics, multiplicative-weights no-regret play,
and PoA reporting against the brute-force optimum.

The enumeration engine tabulates the whole joint-profile space at once.  For
greedy set mechanisms the selected set depends only on the processing order,
so outcomes are cached per permutation and everything else is numpy."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .core import BidProfile, BudgetExceededError, Element, TOL
from .feasibility import iter_feasible_sets
from .mechanisms import (GREEDY_MATCHING, GREEDY_MATROID, OPTIMAL_ON_BIDS,
                         Instance, run)
from .valuations import max_marginal_weight

ENUMERATION_BUDGET = 10 ** 7
SLOW_TABULATION_BUDGET = 200_000


@dataclass(frozen=True)
class BidGrid:
    """Finite ascending bid levels per element; a player's action set is the
    cross product over their elements."""

    levels: Mapping[Element, tuple[float, ...]]

    def __post_init__(self):
        for e, lv in self.levels.items():
            if not lv or lv[0] != 0.0:
                raise ValueError(f"grid for {e.id} must start at 0")
            if any(a >= b for a, b in zip(lv, lv[1:])):
                raise ValueError(f"grid for {e.id} must be strictly ascending")

    @classmethod
    def uniform(cls, elements: Sequence[Element], cap: float,
                num_levels: int) -> "BidGrid":
        if cap <= 0:
            return cls({e: (0.0,) for e in elements})
        vals = tuple(float(v) for v in np.linspace(0.0, cap, num_levels))
        return cls({e: vals for e in elements})

    @classmethod
    def default_for(cls, instance: Instance, num_levels: int = 21) -> "BidGrid":
        cap = max((max_marginal_weight(v) for v in instance.valuations), default=0.0)
        return cls.uniform(instance.elements, cap, num_levels)

    def default_epsilon(self) -> float:
        step = 0.0
        for lv in self.levels.values():
            if len(lv) > 1:
                step = max(step, lv[1] - lv[0])
        return step / 2

    def joint_count(self, elements: Sequence[Element]) -> int:
        total = 1
        for e in elements:
            total *= len(self.levels[e])
        return total


@dataclass(frozen=True)
class EquilibriumResult:
    kind: str
    welfare: float
    revenue: float
    regrets: tuple[float, ...]
    bids: dict[Element, float] | None = None
    rounds: int | None = None
    period: int | None = None


@dataclass
class PureNashSet:
    """All grid profiles where no unilateral grid deviation gains more than
    epsilon.  Stored columnar to keep million-profile enumerations cheap."""

    epsilon: float
    elements: tuple[Element, ...]
    bid_matrix: np.ndarray      # (count, m)
    welfare: np.ndarray         # (count,)
    revenue: np.ndarray         # (count,)
    regrets: np.ndarray         # (count, n) best unilateral gain per player

    @property
    def count(self) -> int:
        return len(self.welfare)

    def results(self, limit: int | None = None) -> list[EquilibriumResult]:
        out = []
        upto = self.count if limit is None else min(limit, self.count)
        for k in range(upto):
            bids = {e: float(self.bid_matrix[k, j])
                    for j, e in enumerate(self.elements)}
            out.append(EquilibriumResult(
                kind=f"pure_nash(eps={self.epsilon:g})",
                welfare=float(self.welfare[k]), revenue=float(self.revenue[k]),
                regrets=tuple(float(r) for r in self.regrets[k]), bids=bids))
        return out


class GridGame:
    """Dense tabulation of a gridded instance: per-profile utilities,
    welfare and revenue over the full joint bid space."""

    def __init__(self, instance: Instance, grid: BidGrid,
                 max_profiles: int = ENUMERATION_BUDGET):
        self.instance = instance
        self.grid = grid
        self.elements = tuple(sorted(instance.elements, key=lambda e: e.tie_rank))
        self.m = len(self.elements)
        self.n = instance.n_players
        self.dims = tuple(len(grid.levels[e]) for e in self.elements)
        self.joint = math.prod(self.dims)
        if self.joint > max_profiles:
            raise BudgetExceededError(
                f"joint profile space has {self.joint} profiles "
                f"(budget {max_profiles}); shrink the grid")
        if self.m > 20:
            raise BudgetExceededError("tabulation limited to 20 elements")
        self.player_axes = {
            i: tuple(j for j, e in enumerate(self.elements) if e.owner == i)
            for i in range(self.n)}
        self._tabulate()

    # -- low-level tables ---------------------------------------------------

    def _bid_matrix(self) -> np.ndarray:
        grids = np.indices(self.dims).reshape(self.m, -1)
        bids = np.empty((self.joint, self.m), dtype=np.float64)
        for j, e in enumerate(self.elements):
            bids[:, j] = np.asarray(self.grid.levels[e])[grids[j]]
        return bids

    def _tabulate(self):
        variant = self.instance.mechanism.variant
        bids = self._bid_matrix()
        if variant in (GREEDY_MATROID, GREEDY_MATCHING):
            masks = self._greedy_masks(bids)
        elif variant == OPTIMAL_ON_BIDS:
            masks = self._optimal_masks(bids)
        else:
            masks = None
        if masks is not None:
            values = np.zeros((self.joint, self.n))
            value_table = self._value_tables()
            for i in range(self.n):
                values[:, i] = value_table[i][masks]
            payments = np.zeros((self.joint, self.n))
            for j, e in enumerate(self.elements):
                sel = (masks >> j) & 1
                payments[:, e.owner] += bids[:, j] * sel
            self.utilities = values - payments
            self.welfare = values.sum(axis=1)
            self.revenue = payments.sum(axis=1)
            self.masks = masks
        else:
            self._tabulate_slowly(bids)
        self.bids = bids

    def _value_tables(self) -> list[np.ndarray]:
        """Per player, the value of every global selection mask (it depends
        only on the player's own bits, computed once per own-subset)."""
        tables = []
        all_masks = np.arange(1 << self.m, dtype=np.int64)
        for i in range(self.n):
            v = self.instance.valuations[i]
            own = [j for j, e in enumerate(self.elements) if e.owner == i]
            keys = np.zeros(1 << self.m, dtype=np.int64)
            for k, j in enumerate(own):
                keys |= ((all_masks >> j) & 1) << k
            own_vals = np.empty(1 << len(own))
            for key in range(1 << len(own)):
                subset = frozenset(self.elements[j] for k, j in enumerate(own)
                                   if (key >> k) & 1)
                own_vals[key] = v.value(subset)
            tables.append(own_vals[keys])
        return tables

    def _greedy_masks(self, bids: np.ndarray) -> np.ndarray:
        # integer processing keys: higher bid first, tie_rank breaks ties
        all_levels = np.unique(np.concatenate(
            [np.asarray(self.grid.levels[e]) for e in self.elements]))
        codes = np.searchsorted(all_levels, bids)          # ascending codes
        keys = (len(all_levels) - codes) * (self.m + 1)
        keys += np.arange(self.m)[None, :]                  # tie_rank position
        order = np.argsort(keys, axis=1, kind="stable")
        pows = (self.m ** np.arange(self.m)).astype(np.int64)
        perm_id = order.astype(np.int64) @ pows
        uniq, first_idx, inverse = np.unique(
            perm_id, return_index=True, return_inverse=True)
        feas = self.instance.mechanism.feasibility
        mask_of = np.empty(len(uniq), dtype=np.int64)
        for k, idx in enumerate(first_idx):
            chk = feas.checker()
            mask = 0
            for j in order[idx]:
                e = self.elements[j]
                if chk.can_add(e):
                    chk.add(e)
                    mask |= 1 << int(j)
            mask_of[k] = mask
        return mask_of[inverse]

    def _optimal_masks(self, bids: np.ndarray) -> np.ndarray:
        feas = self.instance.mechanism.feasibility
        sets = sorted(iter_feasible_sets(feas),
                      key=lambda s: tuple(sorted(e.tie_rank for e in s)))
        index_of = {e: j for j, e in enumerate(self.elements)}
        mask_list = np.array(
            [sum(1 << index_of[e] for e in s) for s in sets], dtype=np.int64)
        bits = np.zeros((len(sets), self.m))
        for k, s in enumerate(sets):
            for e in s:
                bits[k, index_of[e]] = 1.0
        masks = np.empty(self.joint, dtype=np.int64)
        chunk = max(1, 50_000_000 // max(1, len(sets)))
        for lo in range(0, self.joint, chunk):
            hi = min(self.joint, lo + chunk)
            declared = bids[lo:hi] @ bits.T
            best = declared.max(axis=1, keepdims=True)
            choice = (declared >= best - TOL).argmax(axis=1)
            masks[lo:hi] = mask_list[choice]
        return masks

    def _tabulate_slowly(self, bids: np.ndarray):
        if self.joint > SLOW_TABULATION_BUDGET:
            raise BudgetExceededError(
                f"{self.joint} profiles is too many for per-profile runs "
                f"of a fractional mechanism (budget {SLOW_TABULATION_BUDGET})")
        from .core import revenue as total_revenue
        from .core import utility as player_utility
        from .core import welfare as total_welfare
        mech = self.instance.mechanism
        vals = self.instance.valuations
        if mech.variant == "polymatroid_caps":
            raise BudgetExceededError(
                "grid play over capacity declarations is not supported; "
                "use the uncapacitated variant for gridded experiments")
        self.utilities = np.zeros((self.joint, self.n))
        self.welfare = np.zeros(self.joint)
        self.revenue = np.zeros(self.joint)
        self.masks = None
        for k in range(self.joint):
            profile = BidProfile(
                {e: float(bids[k, j]) for j, e in enumerate(self.elements)})
            out = run(mech, profile)
            for i in range(self.n):
                self.utilities[k, i] = player_utility(out, i, vals[i])
            self.welfare[k] = total_welfare(out, vals)
            self.revenue[k] = total_revenue(out)

    # -- views ---------------------------------------------------------------

    def utilities_nd(self) -> np.ndarray:
        return self.utilities.reshape(*self.dims, self.n)

    def profile_index(self, level_indices: Sequence[int]) -> int:
        idx = 0
        for d, k in zip(self.dims, level_indices):
            idx = idx * d + k
        return idx

    def action_space(self, player: int) -> list[tuple[int, ...]]:
        from itertools import product
        axes = self.player_axes[player]
        return list(product(*[range(self.dims[j]) for j in axes]))

    def utility_row(self, player: int, joint_levels: Sequence[int]) -> np.ndarray:
        """Utilities of every own action against the others' fixed levels."""
        u = self.utilities_nd()[..., player]
        sl = list(joint_levels)
        for j in self.player_axes[player]:
            sl[j] = slice(None)
        row = u[tuple(sl)]
        return row.reshape(-1)


# ---------------------------------------------------------------------------
# epsilon pure Nash enumeration


def enumerate_pure_nash(instance: Instance, grid: BidGrid, epsilon: float,
                        max_profiles: int = ENUMERATION_BUDGET) -> PureNashSet:
    """All grid profiles where every unilateral grid deviation gains at most
    epsilon (up to 1e-9 slack)."""
    game = GridGame(instance, grid, max_profiles=max_profiles)
    u = game.utilities_nd()
    n = game.n
    eq = np.ones(game.dims, dtype=bool)
    gains = np.empty((game.joint, n))
    for i in range(n):
        ui = u[..., i]
        br = ui.max(axis=game.player_axes[i], keepdims=True)
        gain = br - ui
        eq &= gain <= epsilon + TOL
        gains[:, i] = gain.reshape(-1)
    flat = eq.reshape(-1)
    idx = np.nonzero(flat)[0]
    return PureNashSet(
        epsilon=epsilon,
        elements=game.elements,
        bid_matrix=game.bids[idx],
        welfare=game.welfare[idx],
        revenue=game.revenue[idx],
        regrets=gains[idx],
    )


# ---------------------------------------------------------------------------
# best response dynamics


def best_response_dynamics(instance: Instance, grid: BidGrid,
                           start: Mapping[Element, float] | None = None,
                           max_rounds: int = 1000,
                           max_actions: int = 100_000) -> EquilibriumResult:
    """Round-robin exact best responses.  A full quiet round is a grid pure
    Nash; a revisited state reports the cycle period instead."""
    game = GridGame(instance, grid)
    for i in range(game.n):
        size = int(np.prod([game.dims[j] for j in game.player_axes[i]] or [1]))
        if size > max_actions:
            raise BudgetExceededError(f"player {i} has {size} actions")
    actions = {i: game.action_space(i) for i in range(game.n)}

    if start is None:
        levels = [0] * game.m
    else:
        levels = []
        for j, e in enumerate(game.elements):
            lv = game.grid.levels[e]
            levels.append(int(np.argmin([abs(v - start[e]) for v in lv])))

    seen: dict[tuple[int, ...], int] = {}
    rounds = 0
    while rounds < max_rounds:
        state = tuple(levels)
        if state in seen:
            period = rounds - seen[state]
            idx = game.profile_index(levels)
            return EquilibriumResult(
                kind="cycle", welfare=float(game.welfare[idx]),
                revenue=float(game.revenue[idx]),
                regrets=_profile_regrets(game, levels),
                bids=_levels_to_bids(game, levels), rounds=rounds, period=period)
        seen[state] = rounds
        rounds += 1
        moved = False
        for i in range(game.n):
            row = game.utility_row(i, levels)
            axes = game.player_axes[i]
            current_action = tuple(levels[j] for j in axes)
            cur_pos = actions[i].index(current_action)
            best_pos = int(np.argmax(row))
            if row[best_pos] > row[cur_pos] + TOL:
                for j, lev in zip(axes, actions[i][best_pos]):
                    levels[j] = lev
                moved = True
        if not moved:
            idx = game.profile_index(levels)
            regrets = _profile_regrets(game, levels)
            assert max(regrets) <= TOL, "fixed point must be an exact grid Nash"
            return EquilibriumResult(
                kind="best_response_fixed_point",
                welfare=float(game.welfare[idx]), revenue=float(game.revenue[idx]),
                regrets=regrets, bids=_levels_to_bids(game, levels), rounds=rounds)
    idx = game.profile_index(levels)
    return EquilibriumResult(
        kind="no_convergence", welfare=float(game.welfare[idx]),
        revenue=float(game.revenue[idx]), regrets=_profile_regrets(game, levels),
        bids=_levels_to_bids(game, levels), rounds=rounds)


def _levels_to_bids(game: GridGame, levels: Sequence[int]) -> dict[Element, float]:
    return {e: game.grid.levels[e][levels[j]]
            for j, e in enumerate(game.elements)}


def _profile_regrets(game: GridGame, levels: Sequence[int]) -> tuple[float, ...]:
    idx = game.profile_index(levels)
    out = []
    for i in range(game.n):
        row = game.utility_row(i, levels)
        out.append(float(row.max() - game.utilities[idx, i]))
    return tuple(out)


# ---------------------------------------------------------------------------
# multiplicative weights / no-regret play


@dataclass
class NoRegretOutcome:
    result: EquilibriumResult
    welfare_history: np.ndarray
    regret_history: np.ndarray  # (T, n) running average regret


def no_regret_play(instance: Instance, grid: BidGrid, rounds: int,
                   eta: float | None = None, seed: int = 0,
                   record_history: bool = False) -> NoRegretOutcome:
    """Each player runs multiplicative weights over their own grid actions
    against realized opponent play; the empirical play distribution is an
    approximate coarse correlated equilibrium."""
    game = GridGame(instance, grid)
    rng = np.random.default_rng(seed)
    n = game.n
    sizes = [len(game.action_space(i)) for i in range(n)]
    weights = [np.ones(s) / s for s in sizes]
    etas = []
    for i, s in enumerate(sizes):
        etas.append(eta if eta is not None else math.sqrt(8 * math.log(max(s, 2)) / rounds))

    # per-player utility scale for the exponential update
    spans = []
    for i in range(n):
        ui = game.utilities[:, i]
        spans.append(max(ui.max() - ui.min(), 1e-12))

    cum_payoff = [np.zeros(s) for s in sizes]   # counterfactual per action
    cum_actual = np.zeros(n)
    welfare_sum = 0.0
    revenue_sum = 0.0
    welfare_hist = np.empty(rounds) if record_history else np.empty(0)
    regret_hist = np.empty((rounds, n)) if record_history else np.empty((0, n))
    actions = {i: game.action_space(i) for i in range(n)}

    levels = [0] * game.m
    for t in range(rounds):
        chosen = []
        for i in range(n):
            p = weights[i] / weights[i].sum()
            chosen.append(int(rng.choice(sizes[i], p=p)))
        for i in range(n):
            for j, lev in zip(game.player_axes[i], actions[i][chosen[i]]):
                levels[j] = lev
        idx = game.profile_index(levels)
        welfare_sum += game.welfare[idx]
        revenue_sum += game.revenue[idx]
        for i in range(n):
            row = game.utility_row(i, levels)
            cum_payoff[i] += row
            cum_actual[i] += row[chosen[i]]
            weights[i] *= np.exp(etas[i] * row / spans[i])
            weights[i] /= weights[i].max()
        if record_history:
            welfare_hist[t] = welfare_sum / (t + 1)
            for i in range(n):
                regret_hist[t, i] = (cum_payoff[i].max() - cum_actual[i]) / (t + 1)

    avg_regrets = tuple(float((cum_payoff[i].max() - cum_actual[i]) / rounds)
                        for i in range(n))
    result = EquilibriumResult(
        kind=f"cce_empirical(T={rounds})",
        welfare=welfare_sum / rounds,
        revenue=revenue_sum / rounds,
        regrets=avg_regrets,
        rounds=rounds)
    return NoRegretOutcome(result, welfare_hist, regret_hist)


# ---------------------------------------------------------------------------
# PoA reporting


SMOOTH_PARAMS_BY_VARIANT = {
    "greedy_matroid": (1 / 3, 1.0),
    "polymatroid": (1 / 3, 1.0),
    "polymatroid_caps": (1 / 3, 1.0),
    "greedy_matching": (1 / 2, 4.0),
}


def poa_bound(instance: Instance) -> float:
    """Worst-case OPT/welfare bound implied by the variant's smoothness."""
    lam, mu = smooth_params(instance)
    return max(1.0, mu) / lam


def smooth_params(instance: Instance) -> tuple[float, float]:
    variant = instance.mechanism.variant
    if variant == OPTIMAL_ON_BIDS:
        k = instance.mechanism.intersection_k
        return 1.0 / (k + 2), 1.0
    return SMOOTH_PARAMS_BY_VARIANT[variant]


@dataclass(frozen=True)
class PoAReport:
    opt: float
    bound: float
    n_equilibria: int
    min_welfare: float
    worst_ratio: float
    welfare_floor: float   # (lambda*OPT - n*eps) / max(1, mu)
    epsilon: float
    epsilon_corrected: bool
    passed: bool


def poa_report(instance: Instance, equilibria: PureNashSet,
               opt: float) -> PoAReport:
    """Check every enumerated equilibrium against the epsilon-corrected
    smoothness welfare floor for the variant's parameters."""
    lam, mu = smooth_params(instance)
    bound = max(1.0, mu) / lam
    n = instance.n_players
    floor = (lam * opt - n * equilibria.epsilon) / max(1.0, mu)
    if equilibria.count == 0:
        return PoAReport(opt=opt, bound=bound, n_equilibria=0,
                         min_welfare=float("nan"), worst_ratio=float("nan"),
                         welfare_floor=floor, epsilon=equilibria.epsilon,
                         epsilon_corrected=True, passed=True)
    min_welfare = float(equilibria.welfare.min())
    worst_ratio = opt / max(min_welfare, 1e-300) if opt > 0 else 1.0
    passed = bool(min_welfare >= floor - TOL)
    return PoAReport(opt=opt, bound=bound, n_equilibria=equilibria.count,
                     min_welfare=min_welfare, worst_ratio=worst_ratio,
                     welfare_floor=floor, epsilon=equilibria.epsilon,
                     epsilon_corrected=True, passed=passed)
