"""Branch-and-bound truncated at a qubit budget, with residual subproblems sampled.

The classical search runs exactly as in :mod:`hybridbb.branch_bound` until
a node's residual problem fits into ``max_qubits``; that residual is then
encoded as a QUBO and handed to a sampler instead of being branched
further. Sampled solutions are checked classically before they may become
the incumbent.

Call counting: ``classical_calls`` is one for setting up the root problem,
plus one per branch taken, plus one per incumbent improvement found by the
classical search itself. ``quantum_calls`` is the number of sampler
queries.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .branch_bound import SearchStats, kp_bb, kp_bb_branch_count, kp_cardinality_bound, tsp_bb
from .errors import BudgetError, InputError
from .problem import (
    FEAS_TOL,
    BitSolution,
    KpInstance,
    TspInstance,
    Tour,
    tour_cost,
    tour_from_position_matrix,
    validate_tour,
)
from .qubo import QuboModel, kp_qubo, slack_bits, tsp_qubo
from .samplers import ExactSampler, Sampler, SampleSet


@dataclass(frozen=True)
class HybridConfig:
    max_qubits: int
    sampler: Sampler = field(default_factory=ExactSampler)
    runs: int = 20
    seed: int = 0

    def __post_init__(self):
        if self.max_qubits < 1:
            raise InputError(f"max_qubits must be >= 1, got {self.max_qubits}")
        if self.runs < 1:
            raise InputError(f"runs must be >= 1, got {self.runs}")

    @classmethod
    def for_cities(cls, cities: int, **kw) -> "HybridConfig":
        return cls(max_qubits=cities * cities, **kw)


@dataclass
class CallRecord:
    index: int
    descriptor: dict
    model: QuboModel
    samples: SampleSet
    num_feasible_reads: int
    best_feasible: BitSolution | None
    # lowest-energy read completed with the fixed prefix, feasible or not
    lowest_energy_solution: BitSolution

    @property
    def num_bits(self) -> int:
        return self.model.num_bits


@dataclass
class HybridTrace:
    budget: int
    classical_calls: int
    quantum_calls: int
    best: BitSolution | None
    per_call_log: list[CallRecord]
    stats: SearchStats
    tour: Tour | None = None

    def summary(self) -> dict:
        return {
            "budget": self.budget,
            "classical_calls": self.classical_calls,
            "quantum_calls": self.quantum_calls,
            "best_objective": None if self.best is None else self.best.objective,
            "best_bits": None if self.best is None else "".join(map(str, self.best.bits)),
            "tour": None if self.tour is None else list(self.tour.order),
            "branch_events": self.stats.branch_events,
            "bound_updates": self.stats.bound_updates,
            "pruned_by_bound": self.stats.pruned_by_bound,
            "pruned_infeasible": self.stats.pruned_infeasible,
            "calls": [
                {
                    "descriptor": c.descriptor,
                    "num_bits": c.num_bits,
                    "lowest_energy": c.samples.lowest_energy,
                    "total_reads": c.samples.total_reads,
                    "distinct": len(c.samples),
                    "feasible_reads": c.num_feasible_reads,
                    "best_feasible_objective": None if c.best_feasible is None else c.best_feasible.objective,
                }
                for c in self.per_call_log
            ],
        }


def call_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence([int(seed), int(index)]).generate_state(1)[0])


def hybrid_kp(inst: KpInstance, cfg: HybridConfig) -> HybridTrace:
    """Knapsack branch-and-bound that delegates residuals of at most ``cfg.max_qubits`` bits.

    A node with ``n_rem`` items left and free capacity ``W'`` is delegated
    when ``n_rem + ceil(log2(W' + 1)) <= max_qubits``.
    """
    n, W = inst.n, inst.capacity
    v, w = inst.values, inst.weights
    budget = cfg.max_qubits
    if budget < slack_bits(W) + 1:
        raise BudgetError(f"a budget of {budget} qubits cannot hold one item plus "
                          f"{slack_bits(W)} slack bits")
    stats = SearchStats()
    calls: list[CallRecord] = []
    best_z = 0.0
    best_x = np.zeros(n, dtype=np.int8)
    stats.incumbent_history.append(best_z)
    x = np.zeros(n, dtype=np.int8)

    def delegate(last, z, free):
        nonlocal best_z, best_x
        lo = last + 1
        sub = KpInstance(v[lo:], w[lo:], free)
        q = kp_qubo(sub)
        samples = cfg.sampler.sample(q, call_seed(cfg.seed, len(calls)))
        n_rem = sub.n
        best_sol, n_ok = None, 0
        for e in samples.entries:
            xr = np.array(e.bits[:n_rem], dtype=np.int8)
            if float(sub.weights @ xr) <= free + FEAS_TOL:
                n_ok += e.occurrences
                zr = z - float(sub.values @ xr)
                if best_sol is None or zr < best_sol.objective:
                    full = x.copy()
                    full[lo:] = xr
                    best_sol = BitSolution(tuple(int(b) for b in full), zr, True)
        first = np.array(samples.first.bits[:n_rem], dtype=np.int8)
        raw = x.copy()
        raw[lo:] = first
        raw_sol = BitSolution(tuple(int(b) for b in raw), z - float(sub.values @ first),
                              bool(float(sub.weights @ first) <= free + FEAS_TOL))
        desc = {"fixed": [int(i) for i in np.flatnonzero(x)], "first_free_item": lo,
                "items": n_rem, "capacity": free}
        calls.append(CallRecord(len(calls), desc, q, samples, n_ok, best_sol, raw_sol))
        if best_sol is not None and best_sol.objective < best_z:
            best_z, best_x = best_sol.objective, np.array(best_sol.bits, dtype=np.int8)
            stats.incumbent_history.append(best_z)

    def visit(last, z, load):
        nonlocal best_z, best_x
        free = W - load
        rest = range(last + 1, n)
        something_fits = any(w[k] <= free + FEAS_TOL for k in rest)
        if something_fits and (n - last - 1) + slack_bits(free) <= budget:
            delegate(last, z, free)
            return
        if z < best_z:
            best_z, best_x = z, x.copy()
            stats.bound_updates += 1
            stats.incumbent_history.append(z)
        for k in rest:
            load2 = load + w[k]
            if load2 > W + FEAS_TOL:
                stats.pruned_infeasible += 1
                continue
            z2 = z - v[k]
            if kp_cardinality_bound(v, w, k + 1, z2, W - load2) >= best_z:
                stats.pruned_by_bound += 1
                continue
            stats.branch_events += 1
            x[k] = 1
            visit(k, z2, load2)
            x[k] = 0

    visit(-1, 0.0, 0.0)
    best = BitSolution(tuple(int(b) for b in best_x), float(best_z), True)
    return HybridTrace(budget, 1 + stats.branch_events + stats.bound_updates, len(calls),
                       best, calls, stats)


def _completion_bound(C, path, unvisited) -> float:
    """Each city still to be entered (and the depot) needs one incoming edge."""
    sources = [path[-1], *unvisited]
    total = 0.0
    for t in unvisited:
        total += min(C[s, t] for s in sources if s != t)
    total += min(C[s, 0] for s in unvisited)
    return total


def residual_tsp(inst: TspInstance, path) -> tuple[TspInstance, list[int]]:
    """TSP over the current city and the unvisited ones, with the current city as depot.

    Edges into the new depot cost what returning to the real depot costs.
    """
    C = inst.cost
    cities = [path[-1]] + sorted(set(range(inst.n)) - set(path))
    m = len(cities)
    sub = np.empty((m, m))
    for a in range(m):
        for b in range(m):
            sub[a, b] = C[cities[a], cities[b]] if b else C[cities[a], 0]
    np.fill_diagonal(sub, 0.0)
    return TspInstance(sub), cities


def hybrid_tsp(inst: TspInstance, cfg: HybridConfig) -> HybridTrace:
    """Best-first TSP branch-and-bound stopped when ``M`` cities remain, ``M = floor(sqrt(max_qubits))``.

    The residual (current city, unvisited cities) is encoded with
    :func:`tsp_qubo` on ``M^2`` bits. A residual is only submitted when its
    prefix cost plus the cheapest incoming edge of every remaining city can
    still beat the incumbent.
    """
    n = inst.n
    cities_budget = math.isqrt(cfg.max_qubits)
    if cities_budget < 3:
        raise BudgetError(f"a budget of {cfg.max_qubits} qubits holds fewer than 3 cities")
    C = inst.cost
    stats = SearchStats()
    calls: list[CallRecord] = []
    best_z = math.inf
    best_tour: Tour | None = None
    heap: list[tuple[float, tuple[int, ...]]] = [(0.0, (0,))]

    def delegate(cost, path):
        nonlocal best_z, best_tour
        sub, cities = residual_tsp(inst, path)
        m = sub.n
        q = tsp_qubo(sub)
        samples = cfg.sampler.sample(q, call_seed(cfg.seed, len(calls)))
        best_sol, n_ok, found = None, 0, None
        for e in samples.entries:
            mat = np.array(e.bits, dtype=np.int8).reshape(m, m)
            if not validate_tour(sub, mat, encoding="position"):
                continue
            n_ok += e.occurrences
            rt = tour_from_position_matrix(mat)
            full = Tour(tuple(path) + tuple(cities[c] for c in rt.order[1:]))
            z = tour_cost(inst, full)
            if best_sol is None or z < best_sol.objective:
                bits = tuple(int(b) for b in full.position_matrix().ravel())
                best_sol, found = BitSolution(bits, z, True), full
        raw_bits = np.array(samples.first.bits, dtype=np.int8)
        raw = BitSolution(tuple(int(b) for b in raw_bits), samples.first.energy,
                          validate_tour(sub, raw_bits.reshape(m, m), encoding="position"))
        desc = {"prefix": list(path), "cities": m, "prefix_cost": cost}
        calls.append(CallRecord(len(calls), desc, q, samples, n_ok, best_sol, raw))
        if best_sol is not None and best_sol.objective < best_z:
            best_z, best_tour = best_sol.objective, found
            stats.incumbent_history.append(best_z)

    while heap:
        cost, path = heapq.heappop(heap)
        if cost >= best_z:
            stats.pruned_by_bound += 1
            continue
        unvisited = [c for c in range(1, n) if c not in path]
        if len(unvisited) + 1 <= cities_budget:
            if cost + _completion_bound(C, path, unvisited) >= best_z:
                stats.pruned_by_bound += 1
                continue
            delegate(cost, path)
            continue
        last = path[-1]
        for city in unvisited:
            c2 = cost + C[last, city]
            if c2 >= best_z:
                stats.pruned_by_bound += 1
                continue
            stats.branch_events += 1
            heapq.heappush(heap, (c2, path + (city,)))

    best = None
    if best_tour is not None:
        best = BitSolution(tuple(int(b) for b in best_tour.position_matrix().ravel()), best_z, True)
    return HybridTrace(cfg.max_qubits, 1 + stats.branch_events + stats.bound_updates, len(calls),
                       best, calls, stats, tour=best_tour)


def run_repeated(solver, inst, cfg: HybridConfig) -> list[HybridTrace]:
    """``cfg.runs`` independent runs; run r uses a seed derived from (cfg.seed, r)."""
    from dataclasses import replace

    return [solver(inst, replace(cfg, seed=call_seed(cfg.seed, 10_000 + r))) for r in range(cfg.runs)]


# --------------------------------------------------------------------------
# call-count study


@dataclass(frozen=True)
class CallCountRow:
    budget: int
    classical_calls: int
    quantum_calls: int
    best_objective: float | None
    classical_baseline: int


CALL_COUNT_COLUMNS = ("budget", "classical_calls", "quantum_calls", "best_objective", "classical_baseline")


def classical_baseline(inst) -> int:
    """Work done by the fully classical solver.

    Knapsack: branch count of unpruned KP-BB, which for unit weights is the
    closed-form sum of binomials. TSP: calls of the pruned best-first
    search, counted as in the hybrid solver.
    """
    if isinstance(inst, KpInstance):
        if np.all(inst.weights == 1):
            return kp_bb_branch_count(inst.n, min(inst.n, int(inst.capacity)))
        return kp_bb(inst, prune=False).stats.branch_events
    if not isinstance(inst, TspInstance):
        raise InputError(f"call counts need a knapsack or TSP instance, got {type(inst).__name__}")
    res = tsp_bb(inst)
    return 1 + res.stats.branch_events + res.stats.bound_updates


def call_count_study(inst, budgets, sampler: Sampler | None = None, seed: int = 0) -> list[CallCountRow]:
    """Run the hybrid solver once per budget.

    Knapsack budgets are qubit counts; TSP budgets are city counts M
    (M^2 qubits).
    """
    sampler = sampler or ExactSampler()
    base = classical_baseline(inst)
    rows = []
    for b in budgets:
        if isinstance(inst, KpInstance):
            tr = hybrid_kp(inst, HybridConfig(int(b), sampler, 1, seed))
        elif isinstance(inst, TspInstance):
            tr = hybrid_tsp(inst, HybridConfig.for_cities(int(b), sampler=sampler, runs=1, seed=seed))
        else:
            raise InputError(f"call-count study needs a knapsack or TSP instance, got {type(inst).__name__}")
        rows.append(CallCountRow(int(b), tr.classical_calls, tr.quantum_calls,
                                 None if tr.best is None else tr.best.objective, base))
    return rows


def write_call_count_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CALL_COUNT_COLUMNS)
        for r in rows:
            w.writerow([r.budget, r.classical_calls, r.quantum_calls,
                        "" if r.best_objective is None else repr(r.best_objective), r.classical_baseline])
