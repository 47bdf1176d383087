"""Samplers: anything that turns a QUBO into a :class:`SampleSet`.

The hybrid solver only relies on the ``sample(model, seed)`` method, so a
client for real annealing hardware can be dropped in next to the three
classical implementations here: exhaustive enumeration, simulated
annealing, and uniform random guessing.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, replace
from typing import Protocol

import numpy as np

from . import _kernels
from .errors import BudgetError, InputError
from .problem import TspInstance, Tour
from .qubo import QuboModel

MAX_EXACT_BITS = 24
MAX_SEARCH_NODES = 200_000_000
MAX_MINIMIZERS = 1 << 16


@dataclass(frozen=True)
class SampleEntry:
    bits: tuple[int, ...]
    energy: float
    occurrences: int


@dataclass(frozen=True)
class SampleSet:
    entries: tuple[SampleEntry, ...]
    total_reads: int
    sampler_id: str
    seed: int | None = None

    @classmethod
    def from_reads(cls, q: QuboModel, X, sampler_id: str, seed=None) -> "SampleSet":
        """Aggregate raw reads (one bitstring per row) into sorted, counted entries."""
        X = np.asarray(X, dtype=np.int8)
        uniq, counts = np.unique(X, axis=0, return_counts=True)
        energies = q.energies(uniq)
        entries = [SampleEntry(tuple(int(b) for b in row), float(e), int(c))
                   for row, e, c in zip(uniq, energies, counts)]
        entries.sort(key=lambda s: (s.energy, s.bits))
        return cls(tuple(entries), int(X.shape[0]), sampler_id, seed)

    @property
    def first(self) -> SampleEntry:
        return self.entries[0]

    @property
    def lowest_energy(self) -> float:
        return self.entries[0].energy

    def __len__(self):
        return len(self.entries)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["bits", "energy", "occurrences"])
        for s in self.entries:
            w.writerow(["".join(map(str, s.bits)), repr(s.energy), s.occurrences])
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {
            "type": "sampleset",
            "sampler_id": self.sampler_id,
            "seed": self.seed,
            "total_reads": self.total_reads,
            "entries": [{"bits": "".join(map(str, s.bits)), "energy": s.energy,
                         "occurrences": s.occurrences} for s in self.entries],
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "SampleSet":
        entries = tuple(SampleEntry(tuple(int(c) for c in e["bits"]), float(e["energy"]),
                                    int(e["occurrences"])) for e in doc["entries"])
        return cls(entries, int(doc["total_reads"]), doc["sampler_id"], doc.get("seed"))


@dataclass(frozen=True)
class SamplerParams:
    num_reads: int = 1000
    sweeps: int = 1000
    beta_initial: float = 0.1
    beta_final: float = 10.0
    seed: int = 0

    def __post_init__(self):
        if self.num_reads < 1:
            raise InputError(f"num_reads must be >= 1, got {self.num_reads}")
        if self.sweeps < 1:
            raise InputError(f"sweeps must be >= 1, got {self.sweeps}")
        if not 0 < self.beta_initial <= self.beta_final:
            raise InputError("need 0 < beta_initial <= beta_final")


def _rng(seed, *stream) -> np.random.Generator:
    return np.random.default_rng([int(seed), *stream] if seed is not None else None)


def sample_exact(q: QuboModel, max_bits: int = MAX_EXACT_BITS, tol: float = 1e-9) -> SampleSet:
    """Every global minimizer of ``q``, each read once."""
    m = q.num_bits
    if m > max_bits:
        raise BudgetError(f"exact enumeration is capped at {max_bits} bits, model has {m}")
    if m < 1:
        raise InputError("model has no variables")
    t = _tolerance(q, tol)
    codes = _kernels.near_minimizers(q.linear.copy(), q.symmetric_matrix(), t)
    X = ((codes[:, None] >> np.arange(m)) & 1).astype(np.int8)
    energies = q.energies(X)
    keep = energies <= energies.min() + t
    X = X[keep]
    return SampleSet.from_reads(q, X, "exact")


def _tolerance(q: QuboModel, tol: float) -> float:
    return tol * max(1.0, float(np.abs(q.linear).sum()) + float(np.abs(q.pair_arrays()[2]).sum()))


def sample_exact_structured(q: QuboModel, tol: float = 1e-9,
                            max_nodes: int = MAX_SEARCH_NODES) -> SampleSet:
    """Every global minimizer of a penalty-built model, found by branch and bound.

    Needs ``q.structure`` (set by the reductions in :mod:`hybridbb.qubo`).
    The search is exhaustive up to provably dominated subtrees, so the
    result matches enumeration; it just reaches sizes enumeration cannot.
    """
    st = q.structure
    if st is None:
        raise BudgetError(f"model has {q.num_bits} bits and no penalty structure; "
                          f"exact sampling beyond {MAX_EXACT_BITS} bits needs one")
    t = _tolerance(q, tol)
    sols, count, _, status = _kernels.penalty_bb(
        st.objective_linear, st.objective_matrix(), st.lam, st.rhs, st.coeffs,
        t, MAX_MINIMIZERS, int(max_nodes))
    if status == 1:
        raise BudgetError(f"more than {MAX_MINIMIZERS} degenerate minimizers")
    if status == 2:
        raise BudgetError(f"exact search exceeded {max_nodes} nodes")
    X = sols[:count]
    energies = q.energies(X)
    return SampleSet.from_reads(q, X[energies <= energies.min() + t], "exact")


def sample_sa(q: QuboModel, p: SamplerParams | None = None) -> SampleSet:
    """Simulated annealing with ``p.num_reads`` independent restarts.

    Each restart begins at a uniformly random string and runs ``p.sweeps``
    sweeps of single-flip Metropolis moves while beta rises geometrically
    from ``beta_initial`` to ``beta_final``.
    """
    p = p or SamplerParams()
    m = q.num_bits
    if m < 1:
        raise InputError("model has no variables")
    rng = _rng(p.seed)
    x0 = rng.integers(0, 2, size=(p.num_reads, m), dtype=np.int8)
    betas = np.geomspace(p.beta_initial, p.beta_final, p.sweeps)
    X = _kernels.anneal(q.linear.copy(), q.symmetric_matrix(), x0, betas, rng)
    return SampleSet.from_reads(q, X, "sa", p.seed)


def sample_uniform(q: QuboModel, num_reads: int, seed) -> SampleSet:
    if num_reads < 1:
        raise InputError(f"num_reads must be >= 1, got {num_reads}")
    X = _rng(seed).integers(0, 2, size=(num_reads, q.num_bits), dtype=np.int8)
    return SampleSet.from_reads(q, X, "random", seed)


def sample_random_baseline(q: QuboModel, num_draws: int, repetitions: int, seed) -> list[SampleSet]:
    """Best-of-``num_draws`` random guessing, repeated ``repetitions`` times.

    Each returned set holds all draws of one repetition; its first entry
    (lowest energy, ties broken by bitstring) is that repetition's champion.
    """
    if repetitions < 1:
        raise InputError(f"repetitions must be >= 1, got {repetitions}")
    return [sample_uniform(q, num_draws, int(np.random.SeedSequence([int(seed), r]).generate_state(1)[0]))
            for r in range(repetitions)]


def sample_random_tour_baseline(inst: TspInstance, repetitions: int, seed) -> list[Tour]:
    """Uniformly random tours with the depot first; always feasible."""
    if repetitions < 1:
        raise InputError(f"repetitions must be >= 1, got {repetitions}")
    rng = _rng(seed)
    return [Tour((0,) + tuple(int(c) + 1 for c in rng.permutation(inst.n - 1)))
            for _ in range(repetitions)]


class Sampler(Protocol):
    name: str

    def sample(self, q: QuboModel, seed: int) -> SampleSet: ...


class ExactSampler:
    """Ground truth: enumeration up to ``max_bits``, structured search above."""

    name = "exact"

    def __init__(self, max_bits: int = MAX_EXACT_BITS, structured: bool = True):
        self.max_bits = max_bits
        self.structured = structured

    def sample(self, q, seed=None):
        if q.num_bits <= self.max_bits or not self.structured:
            return sample_exact(q, self.max_bits)
        return sample_exact_structured(q)


class SimulatedAnnealingSampler:
    name = "sa"

    def __init__(self, params: SamplerParams | None = None):
        self.params = params or SamplerParams()

    def sample(self, q, seed=None):
        p = self.params if seed is None else replace(self.params, seed=int(seed))
        return sample_sa(q, p)


class RandomSampler:
    """Uniform random strings; the hybrid solver keeps the best feasible one."""

    name = "random"

    def __init__(self, num_reads: int = 1000):
        self.num_reads = num_reads

    def sample(self, q, seed=None):
        return sample_uniform(q, self.num_reads, seed)


def make_sampler(name: str, params: SamplerParams | None = None) -> Sampler:
    params = params or SamplerParams()
    if name == "exact":
        return ExactSampler()
    if name == "sa":
        return SimulatedAnnealingSampler(params)
    if name == "random":
        return RandomSampler(params.num_reads)
    raise InputError(f"unknown sampler {name!r}; expected 'exact', 'sa' or 'random'")
