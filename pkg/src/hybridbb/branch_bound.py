"""Exact classical branch-and-bound solvers.

Three flavours are provided:

* :func:`bb_generic` fixes one variable per tree level (x=0 child first) on
  any :class:`BlopInstance`;
* :func:`kp_bb` is the knapsack specialisation where the k-th branch adds
  item k and excludes all items before it, explored depth-first;
* :func:`tsp_bb` grows paths from the depot, best-first on accumulated cost.

All of them count their work in :class:`SearchStats`, since the hybrid
solver's call counts are compared against these numbers.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetError, InputError
from .problem import (
    EQ,
    FEAS_TOL,
    BitSolution,
    BlopInstance,
    KpInstance,
    TspInstance,
    Tour,
)

MAX_GENERIC_VARS = 32
MAX_TSP_CITIES = 12


@dataclass
class SearchStats:
    branch_events: int = 0
    bound_updates: int = 0
    pruned_by_bound: int = 0
    pruned_infeasible: int = 0
    # nodes whose load equals the capacity (knapsack only)
    saturated_nodes: int = 0
    incumbent_history: list[float] = field(default_factory=list)


@dataclass
class BbResult:
    best: BitSolution | None
    stats: SearchStats
    proven_optimal: bool
    tour: Tour | None = None

    @property
    def infeasible(self) -> bool:
        return self.best is None


def _improve(stats: SearchStats, z: float) -> None:
    stats.bound_updates += 1
    stats.incumbent_history.append(float(z))


def bb_generic(inst: BlopInstance, prune: bool = True, max_vars: int = MAX_GENERIC_VARS) -> BbResult:
    """Depth-first binary branch-and-bound in natural variable order.

    The lower bound of a node is the cost of its fixed variables plus every
    negative cost coefficient among the free ones. A node is dropped when
    that bound cannot beat the incumbent, or when some row is violated even
    by the most favourable completion.
    """
    n, m = inst.n, inst.m
    if n > max_vars:
        raise BudgetError(f"bb_generic is capped at {max_vars} variables, instance has {n}")
    c, A, b = inst.c, inst.A, inst.b
    is_eq = np.array([s == EQ for s in inst.sense], dtype=bool)

    def suffix(a):
        out = np.zeros(a.shape[:-1] + (n + 1,))
        out[..., :n] = np.cumsum(a[..., ::-1], axis=-1)[..., ::-1]
        return out

    cost_lb = suffix(np.minimum(c, 0.0))
    row_lo = suffix(np.minimum(A, 0.0))
    row_hi = suffix(np.maximum(A, 0.0))

    stats = SearchStats()
    best_z = math.inf
    best_x: np.ndarray | None = None
    x = np.zeros(n, dtype=np.int8)

    def violated(lhs, depth):
        if m == 0:
            return False
        lo = lhs + row_lo[:, depth]
        if (lo > b + FEAS_TOL).any():
            return True
        hi = lhs + row_hi[:, depth]
        return bool((is_eq & (hi < b - FEAS_TOL)).any())

    def visit(depth, z, lhs):
        nonlocal best_z, best_x
        if depth == n:
            if violated(lhs, n):
                stats.pruned_infeasible += 1
            elif z < best_z:
                best_z, best_x = z, x.copy()
                _improve(stats, z)
            return
        for val in (0, 1):
            z2 = z + c[depth] * val
            lhs2 = lhs + A[:, depth] * val if val else lhs
            if prune:
                if violated(lhs2, depth + 1):
                    stats.pruned_infeasible += 1
                    continue
                if z2 + cost_lb[depth + 1] >= best_z:
                    stats.pruned_by_bound += 1
                    continue
            stats.branch_events += 1
            x[depth] = val
            visit(depth + 1, z2, lhs2)
        x[depth] = 0

    visit(0, 0.0, np.zeros(m))
    best = None
    if best_x is not None:
        best = BitSolution(tuple(int(v) for v in best_x), float(best_z), True)
    return BbResult(best, stats, proven_optimal=True)


def kp_cardinality_bound(values, weights, start: int, z: float, free_capacity: float) -> float:
    """Lower bound on the objective of any completion using items ``start..``.

    A completion can hold at most as many items as the lightest remaining
    ones that fit together, so it gains at most the sum of that many largest
    values.
    """
    v = values[start:]
    w = weights[start:]
    fits = w <= free_capacity + FEAS_TOL
    if not fits.any():
        return z
    w_sorted = np.sort(w[fits])
    k = int(np.searchsorted(np.cumsum(w_sorted), free_capacity + FEAS_TOL, side="right"))
    if k == 0:
        return z
    top = np.sort(v[fits])[::-1][:k]
    return z - float(top.sum())


def kp_bb(inst: KpInstance, prune: bool = True, max_vars: int = MAX_GENERIC_VARS) -> BbResult:
    """Depth-first knapsack branch-and-bound.

    Starting from the empty knapsack, the branch for item k adds that item
    and leaves items before k out, which leaves a smaller knapsack over
    items after k with capacity reduced by w_k. A branch stops when no
    further item fits or items run out.
    """
    n = inst.n
    if n > max_vars:
        raise BudgetError(f"kp_bb is capped at {max_vars} items, instance has {n}")
    v, w, W = inst.values, inst.weights, inst.capacity
    stats = SearchStats()
    best_z = 0.0
    best_x = np.zeros(n, dtype=np.int8)
    stats.incumbent_history.append(best_z)
    x = np.zeros(n, dtype=np.int8)

    def visit(last, z, load):
        nonlocal best_z, best_x
        if abs(load - W) <= FEAS_TOL:
            stats.saturated_nodes += 1
        if z < best_z:
            best_z, best_x = z, x.copy()
            _improve(stats, z)
        for k in range(last + 1, n):
            load2 = load + w[k]
            if load2 > W + FEAS_TOL:
                stats.pruned_infeasible += 1
                continue
            z2 = z - v[k]
            if prune and kp_cardinality_bound(v, w, k + 1, z2, W - load2) >= best_z:
                stats.pruned_by_bound += 1
                continue
            stats.branch_events += 1
            x[k] = 1
            visit(k, z2, load2)
            x[k] = 0

    visit(-1, 0.0, 0.0)
    best = BitSolution(tuple(int(b) for b in best_x), float(best_z), True)
    return BbResult(best, stats, proven_optimal=True)


def kp_bb_branch_count(n: int, w_cap: int) -> int:
    """Branches explored by unpruned KP-BB on the unit-weight toy family: sum_{k=1..W} C(n, k)."""
    if not 1 <= w_cap <= n:
        raise InputError(f"need 1 <= w_cap <= n, got n={n}, w_cap={w_cap}")
    return sum(math.comb(n, k) for k in range(1, w_cap + 1))


def tsp_bb(inst: TspInstance, prune: bool = True, max_cities: int = MAX_TSP_CITIES) -> BbResult:
    """Best-first TSP branch-and-bound over partial paths from the depot.

    The frontier is ordered by accumulated cost, ties broken by the
    lexicographically smallest path. Partial paths whose cost already
    reaches the incumbent are dropped.
    """
    n = inst.n
    if n > max_cities:
        raise BudgetError(f"tsp_bb is capped at {max_cities} cities, instance has {n}")
    C = inst.cost
    stats = SearchStats()
    best_z = math.inf
    best_tour: tuple[int, ...] | None = None
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, (0,))]
    while heap:
        cost, path = heapq.heappop(heap)
        if prune and cost >= best_z:
            stats.pruned_by_bound += 1
            continue
        last = path[-1]
        closes = len(path) + 1 == n
        for city in range(1, n):
            if city in path:
                continue
            c2 = cost + C[last, city]
            if closes:
                stats.branch_events += 1
                total = c2 + C[city, 0]
                if total < best_z:
                    best_z, best_tour = total, path + (city,)
                    _improve(stats, total)
            elif prune and c2 >= best_z:
                stats.pruned_by_bound += 1
            else:
                stats.branch_events += 1
                heapq.heappush(heap, (c2, path + (city,)))
    tour = Tour(best_tour)
    bits = tuple(int(b) for b in tour.position_matrix().ravel())
    return BbResult(BitSolution(bits, float(best_z), True), stats, True, tour=tour)

