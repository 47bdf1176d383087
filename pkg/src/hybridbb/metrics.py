"""Figures of merit for solutions returned by the hybrid solver.

``delta_v`` keeps the sign of the raw formula ``(z_a - z_opt) / z_opt``.
Knapsack objectives are stored negated, so a worse feasible answer gives a
non-positive value; tables therefore carry the absolute value as well.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError
from .samplers import SampleSet

P0_TOL = 1e-9


def delta_v(z_a: float, z_opt: float) -> float:
    """Normalized value distance ``(z_a - z_opt) / z_opt``."""
    if z_opt == 0:
        raise InputError("normalized value distance is undefined for a zero optimum")
    return (z_a - z_opt) / z_opt


def w_tilde(weight: float, capacity: float) -> float:
    """Load relative to capacity; above 1 means the knapsack is overloaded."""
    if capacity <= 0:
        raise InputError(f"capacity must be positive, got {capacity}")
    return weight / capacity


def hamming(a, b) -> int:
    a = np.asarray(a, dtype=np.int64).reshape(-1)
    b = np.asarray(b, dtype=np.int64).reshape(-1)
    if a.size != b.size:
        raise InputError(f"hamming distance needs equal lengths, got {a.size} and {b.size}")
    return int(np.count_nonzero(a != b))


def c_tilde(z_a: float, z_opt: float) -> float:
    """Tour cost relative to the optimal one."""
    if z_opt <= 0:
        raise InputError(f"optimal tour cost must be positive, got {z_opt}")
    return z_a / z_opt


def p0_estimate(samples: SampleSet, ground_energy: float, tol: float = P0_TOL) -> float:
    """Fraction of reads whose energy is the ground energy."""
    if samples.total_reads < 1 or not samples.entries:
        raise InputError("cannot estimate p0 from an empty sample set")
    hits = sum(e.occurrences for e in samples.entries if abs(e.energy - ground_energy) <= tol)
    return hits / samples.total_reads


def aggregate(values) -> tuple[float, float]:
    """Mean and population variance (divisor n)."""
    a = np.asarray(list(values), dtype=float)
    if a.size == 0:
        raise InputError("aggregate needs at least one value")
    return float(a.mean()), float(a.var())


@dataclass(frozen=True)
class MetricReport:
    """Per-run metric values plus their mean and variance.

    Metrics that do not apply (``w_tilde`` for tours, ``c_tilde`` for
    knapsacks) are left as empty tuples.
    """

    delta_v: tuple[float, ...] = ()
    w_tilde: tuple[float, ...] = ()
    hamming: tuple[int, ...] = ()
    c_tilde: tuple[float, ...] = ()
    p0: tuple[float, ...] = ()

    def __post_init__(self):
        if any(h < 0 for h in self.hamming):
            raise InputError("hamming distances must be non-negative")
        if any(not 0.0 <= p <= 1.0 for p in self.p0):
            raise InputError("p0 values must lie in [0, 1]")

    @property
    def abs_delta_v(self) -> tuple[float, ...]:
        return tuple(abs(d) for d in self.delta_v)

    def summary(self) -> dict[str, tuple[float, float]]:
        """``{metric: (mean, variance)}`` for every metric that has values."""
        out = {}
        for name in ("delta_v", "abs_delta_v", "w_tilde", "hamming", "c_tilde", "p0"):
            vals = getattr(self, name)
            if vals:
                out[name] = aggregate(vals)
        return out
