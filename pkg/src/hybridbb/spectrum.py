"""Instantaneous spectrum of the transverse-field annealing Hamiltonian.

``H(s) = -A(s) sum_i sigma_x^i + B(s) H_P`` where ``H_P`` is diagonal and
holds the Ising energy (offset included) of every spin configuration.
Basis state ``c`` is read MSB-first as in :func:`hybridbb.qubo.all_bitstrings`;
bit value 0 is spin +1/2 (the +1 eigenvector of sigma_z) and bit value 1 is
spin -1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import BudgetError, InputError, NumericalError
from .qubo import IsingModel, all_bitstrings, kp_qubo, qubo_to_ising, slack_bits
from .problem import kp_toy

MAX_SPECTRUM_SPINS = 12
MAX_BOUND_SPINS = 10
DEGENERACY_TOL = 1e-9
DEFAULT_GRID = 201


@dataclass(frozen=True, eq=False)
class Schedule:
    """Piecewise-linear ``A(s)`` and ``B(s)`` on ``[0, 1]``."""

    s: np.ndarray
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        s, A, B = (np.array(v, dtype=float).reshape(-1) for v in (self.s, self.A, self.B))
        if not (s.size == A.size == B.size) or s.size < 2:
            raise InputError("schedule needs at least two (s, A, B) samples of equal length")
        if np.any(np.diff(s) <= 0):
            raise InputError("schedule s values must be strictly increasing")
        if s[0] != 0.0 or s[-1] != 1.0:
            raise InputError("schedule must cover s = 0 and s = 1")
        if np.any(A < 0) or np.any(B < 0):
            raise InputError("schedule amplitudes must be non-negative")
        if A[0] <= 0:
            raise InputError("transverse amplitude A(0) must be positive")
        for name, v in (("s", s), ("A", A), ("B", B)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    @classmethod
    def linear(cls) -> "Schedule":
        return cls([0.0, 1.0], [1.0, 0.0], [0.0, 1.0])

    @classmethod
    def constant(cls, a: float, b: float) -> "Schedule":
        return cls([0.0, 1.0], [a, a], [b, b])

    @classmethod
    def from_file(cls, path) -> "Schedule":
        """Whitespace or comma separated table.

        Three columns are ``s, A, B``. Two columns are ``s, f`` with
        ``A = 1 - f`` and ``B = f``.
        """
        try:
            with open(path) as fh:
                text = fh.read().replace(",", " ")
            rows = [line.split() for line in text.splitlines()
                    if line.strip() and not line.lstrip().startswith("#")]
            data = np.array(rows, dtype=float)
        except OSError as exc:
            raise InputError(f"cannot read schedule file {path}: {exc.strerror}") from None
        except ValueError:
            raise InputError(f"schedule file {path} must hold a numeric table") from None
        if data.ndim != 2 or data.shape[1] not in (2, 3):
            raise InputError(f"schedule file {path} needs two or three columns")
        if data.shape[1] == 2:
            return cls(data[:, 0], 1.0 - data[:, 1], data[:, 1])
        return cls(data[:, 0], data[:, 1], data[:, 2])

    def __call__(self, s: float) -> tuple[float, float]:
        return float(np.interp(s, self.s, self.A)), float(np.interp(s, self.s, self.B))

    def derivative(self, s: float, h: float) -> tuple[float, float]:
        """Central difference of the interpolants, one-sided at the ends."""
        lo, hi = max(0.0, s - h), min(1.0, s + h)
        a0, b0 = self(lo)
        a1, b1 = self(hi)
        return (a1 - a0) / (hi - lo), (b1 - b0) / (hi - lo)


def _check_size(m: IsingModel, cap: int) -> None:
    if m.num_spins > cap:
        raise BudgetError(f"dense diagonalization is capped at {cap} spins, model has {m.num_spins}")
    if m.num_spins < 1:
        raise InputError("model has no spins")


def problem_diagonal(m: IsingModel) -> np.ndarray:
    """Ising energy of every basis state."""
    spins = 0.5 - all_bitstrings(m.num_spins).astype(float)
    return m.energies(spins)


def transverse_matrix(num_spins: int) -> np.ndarray:
    """``sum_i sigma_x^i`` as a dense matrix."""
    dim = 1 << num_spins
    X = np.zeros((dim, dim))
    idx = np.arange(dim)
    for k in range(num_spins):
        X[idx, idx ^ (1 << k)] = 1.0
    return X


def build_annealing_hamiltonian(m: IsingModel, sched: Schedule, s: float) -> np.ndarray:
    _check_size(m, MAX_SPECTRUM_SPINS)
    if not 0.0 <= s <= 1.0:
        raise InputError(f"s must lie in [0, 1], got {s}")
    a, b = sched(s)
    return -a * transverse_matrix(m.num_spins) + np.diag(b * problem_diagonal(m))


def _first_excited(evals: np.ndarray, tol: float = DEGENERACY_TOL) -> int:
    """Index of the lowest eigenvalue distinct from the ground level."""
    e0 = evals[0]
    above = np.flatnonzero(evals - e0 > tol * max(1.0, abs(e0)))
    if above.size == 0:
        return -1
    return int(above[0])


@dataclass(frozen=True, eq=False)
class GapScan:
    s_values: np.ndarray
    gap: np.ndarray
    ground_energy: np.ndarray
    matrix_dim: int

    @property
    def min_gap(self) -> float:
        return float(self.gap.min())

    @property
    def argmin_s(self) -> float:
        return float(self.s_values[int(np.argmin(self.gap))])

    def to_csv(self) -> str:
        lines = ["s,gap"]
        lines += [f"{s!r},{g!r}" for s, g in zip(self.s_values.tolist(), self.gap.tolist())]
        return "\n".join(lines) + "\n"


def gap_scan(m: IsingModel, sched: Schedule | None = None, grid_points: int = DEFAULT_GRID) -> GapScan:
    """Gap between the ground level and the first distinct level on a uniform s grid."""
    sched = sched or Schedule.linear()
    _check_size(m, MAX_SPECTRUM_SPINS)
    if grid_points < 3:
        raise InputError(f"grid_points must be >= 3, got {grid_points}")
    grid = np.linspace(0.0, 1.0, grid_points)
    X = transverse_matrix(m.num_spins)
    diag = problem_diagonal(m)
    gaps = np.empty(grid_points)
    ground = np.empty(grid_points)
    for t, s in enumerate(grid):
        a, b = sched(s)
        H = -a * X
        H[np.diag_indices_from(H)] += b * diag
        evals = np.linalg.eigvalsh(H)
        j = _first_excited(evals)
        gaps[t] = 0.0 if j < 0 else evals[j] - evals[0]
        ground[t] = evals[0]
    return GapScan(grid, gaps, ground, 1 << m.num_spins)


@dataclass(frozen=True)
class PowerLawFit:
    """``value ~ prefactor * size**exponent``; a shrinking gap has a negative exponent."""

    exponent: float
    prefactor: float
    r_squared: float
    sizes: tuple[int, ...] = ()
    values: tuple[float, ...] = ()

    def to_dict(self) -> dict:
        return {"exponent": self.exponent, "prefactor": self.prefactor, "r_squared": self.r_squared,
                "sizes": list(self.sizes), "min_gaps": list(self.values)}


def fit_power_law(sizes, values) -> PowerLawFit:
    x = np.log(np.asarray(sizes, dtype=float))
    y_raw = np.asarray(values, dtype=float)
    if x.size < 2 or x.size != y_raw.size:
        raise InputError("a power-law fit needs at least two (size, value) pairs")
    if np.any(y_raw <= 0) or not np.all(np.isfinite(y_raw)):
        raise NumericalError("power-law fit needs positive finite values")
    y = np.log(y_raw)
    slope, intercept = np.polyfit(x, y, 1)
    resid = y - (slope * x + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    ss_res = float((resid ** 2).sum())
    r2 = 1.0 if ss_tot <= 1e-24 else 1.0 - ss_res / ss_tot
    return PowerLawFit(float(slope), float(math.exp(intercept)), r2,
                       tuple(int(s) for s in sizes), tuple(float(v) for v in y_raw))


def kp_toy_family(w_cap: int) -> Callable[[int], IsingModel]:
    """Ising models of ``kp_toy(M - slack, w_cap)`` indexed by qubit count ``M``."""
    k = slack_bits(w_cap)

    def make(num_qubits: int) -> IsingModel:
        return qubo_to_ising(kp_qubo(kp_toy(num_qubits - k, w_cap)))

    return make


def gap_scaling_study(family: Callable[[int], IsingModel], sizes: Sequence[int],
                      sched: Schedule | None = None, grid_points: int = DEFAULT_GRID) -> PowerLawFit:
    """Minimum gap for each size, fitted to a power law in the size."""
    if len(sizes) < 2:
        raise InputError("gap scaling needs at least two sizes")
    gaps = []
    for size in sizes:
        model = family(int(size))
        gaps.append(gap_scan(model, sched, grid_points).min_gap)
    return fit_power_law(sizes, gaps)


def _phase_fixed(v: np.ndarray) -> np.ndarray:
    k = int(np.argmax(np.abs(v)))
    return v * (abs(v[k]) / v[k])


@dataclass(frozen=True)
class AdiabaticBound:
    """``max_s |<e0|dH/ds|e1>| / gap^2``; infinite when some grid point is degenerate."""

    value: float
    argmax_s: float
    degenerate_s: float | None = None

    @property
    def bounded(self) -> bool:
        return self.degenerate_s is None


def adiabatic_bound(m: IsingModel, sched: Schedule | None = None,
                    grid_points: int = DEFAULT_GRID) -> AdiabaticBound:
    sched = sched or Schedule.linear()
    _check_size(m, MAX_BOUND_SPINS)
    if grid_points < 3:
        raise InputError(f"grid_points must be >= 3, got {grid_points}")
    grid = np.linspace(0.0, 1.0, grid_points)
    h = grid[1] - grid[0]
    X = transverse_matrix(m.num_spins)
    diag = problem_diagonal(m)
    best, best_s = 0.0, float(grid[0])
    for s in grid:
        a, b = sched(s)
        H = -a * X
        H[np.diag_indices_from(H)] += b * diag
        evals, evecs = np.linalg.eigh(H)
        j = _first_excited(evals)
        if j < 0:
            return AdiabaticBound(math.inf, float(s), float(s))
        da, db = sched.derivative(s, h)
        v0 = _phase_fixed(evecs[:, 0])
        v1 = _phase_fixed(evecs[:, j])
        dH_v1 = -da * (X @ v1) + db * diag * v1
        num = abs(float(v0 @ dH_v1))
        gap = evals[j] - evals[0]
        val = num / gap ** 2
        if val > best:
            best, best_s = float(val), float(s)
    return AdiabaticBound(best, best_s)
