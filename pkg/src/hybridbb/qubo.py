"""QUBO and Ising forms of binary linear problems.

Conventions
-----------
* A :class:`QuboModel` is ``offset + sum_i linear[i] x_i + sum_{i<j} q_ij x_i x_j``
  and its objective term is the instance's own minimisation objective ``c.x``
  (for a knapsack that is ``-v.x``).
* Inequality rows ``A_j x <= b_j`` become equalities with binary slack
  integers ``sum_k 2^k s_jk`` and are penalised as
  ``lam_j (b_j - A_j x - slack_j)^2``.
* Spins are ``s = x - 1/2`` so that x=0 maps to s=-1/2 and x=1 to s=+1/2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from . import _kernels
from .errors import InputError
from .problem import LE, BlopInstance, KpInstance, TspInstance


@dataclass(frozen=True, eq=False)
class QuboModel:
    num_bits: int
    linear: np.ndarray
    quadratic: Mapping[tuple[int, int], float]
    offset: float = 0.0
    var_names: tuple[str, ...] = ()
    structure: "PenaltyStructure | None" = field(default=None, repr=False)
    _pairs: tuple = field(init=False, repr=False)

    def __post_init__(self):
        m = int(self.num_bits)
        lin = np.array(self.linear, dtype=float).reshape(-1)
        if lin.size != m:
            raise InputError(f"linear has {lin.size} entries for {m} bits")
        quad = {}
        for (i, j), q in dict(self.quadratic).items():
            i, j = int(i), int(j)
            if not (0 <= i < j < m):
                raise InputError(f"quadratic key ({i}, {j}) must satisfy 0 <= i < j < {m}")
            if q != 0:
                quad[(i, j)] = float(q)
        names = tuple(self.var_names) or tuple(f"x{i}" for i in range(m))
        if len(names) != m:
            raise InputError(f"var_names has {len(names)} entries for {m} bits")
        lin.setflags(write=False)
        keys = sorted(quad)
        pairs = (
            np.array([k[0] for k in keys], dtype=np.int64),
            np.array([k[1] for k in keys], dtype=np.int64),
            np.array([quad[k] for k in keys], dtype=float),
        )
        object.__setattr__(self, "num_bits", m)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "quadratic", quad)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "var_names", names)
        object.__setattr__(self, "_pairs", pairs)
        if self.structure is not None and self.structure.num_bits != m:
            raise InputError("penalty structure does not match the model size")

    def pair_arrays(self):
        return self._pairs

    def symmetric_matrix(self) -> np.ndarray:
        """Zero-diagonal symmetric coupling matrix (each pair on both sides)."""
        Qs = np.zeros((self.num_bits, self.num_bits))
        pi, pj, pq = self._pairs
        Qs[pi, pj] = pq
        Qs[pj, pi] = pq
        return Qs

    def energies(self, X) -> np.ndarray:
        """Evaluate a batch of bitstrings (one per row)."""
        X = np.ascontiguousarray(X, dtype=np.int8)
        if X.ndim != 2 or X.shape[1] != self.num_bits:
            raise InputError(f"expected rows of {self.num_bits} bits, got shape {X.shape}")
        pi, pj, pq = self._pairs
        return _kernels.energies(X, self.linear, pi, pj, pq, self.offset)

    def to_dict(self) -> dict:
        return {
            "type": "qubo",
            "num_bits": self.num_bits,
            "linear": self.linear.tolist(),
            "quadratic": [[i, j, q] for (i, j), q in sorted(self.quadratic.items())],
            "offset": self.offset,
            "var_names": list(self.var_names),
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "QuboModel":
        try:
            quad = {(int(i), int(j)): float(q) for i, j, q in doc["quadratic"]}
            return cls(doc["num_bits"], doc["linear"], quad, doc.get("offset", 0.0),
                       tuple(doc.get("var_names", ())))
        except KeyError as exc:
            raise InputError(f"qubo document is missing field {exc.args[0]!r}") from None


@dataclass(frozen=True, eq=False)
class PenaltyStructure:
    """How a penalty-built QUBO decomposes.

    The model equals ``objective(x) + sum_k lam[k] * (rhs[k] - coeffs[k] . x)^2``
    where ``objective`` is itself a QUBO without offset.  Exact solvers can
    bound each squared term by the distance from ``rhs[k]`` to the values the
    still-free bits can reach, which enumeration cannot exploit.
    """

    num_bits: int
    objective_linear: np.ndarray
    objective_quadratic: Mapping[tuple[int, int], float]
    lam: np.ndarray
    rhs: np.ndarray
    coeffs: np.ndarray

    def objective_matrix(self) -> np.ndarray:
        Qs = np.zeros((self.num_bits, self.num_bits))
        for (i, j), q in self.objective_quadratic.items():
            Qs[i, j] = Qs[j, i] = q
        return Qs


@dataclass(frozen=True, eq=False)
class IsingModel:
    num_spins: int
    h: np.ndarray
    J: Mapping[tuple[int, int], float]
    offset: float = 0.0

    def __post_init__(self):
        m = int(self.num_spins)
        h = np.array(self.h, dtype=float).reshape(-1)
        if h.size != m:
            raise InputError(f"h has {h.size} entries for {m} spins")
        J = {}
        for (i, j), q in dict(self.J).items():
            if not (0 <= i < j < m):
                raise InputError(f"coupling key ({i}, {j}) must satisfy 0 <= i < j < {m}")
            if q != 0:
                J[(int(i), int(j))] = float(q)
        h.setflags(write=False)
        object.__setattr__(self, "num_spins", m)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "J", J)
        object.__setattr__(self, "offset", float(self.offset))

    def energies(self, S) -> np.ndarray:
        S = np.asarray(S, dtype=float)
        if S.ndim != 2 or S.shape[1] != self.num_spins:
            raise InputError(f"expected rows of {self.num_spins} spins, got shape {S.shape}")
        e = S @ self.h
        for (i, j), q in sorted(self.J.items()):
            e = e + q * S[:, i] * S[:, j]
        return e + self.offset

    def to_dict(self) -> dict:
        return {
            "type": "ising",
            "num_spins": self.num_spins,
            "h": self.h.tolist(),
            "J": [[i, j, q] for (i, j), q in sorted(self.J.items())],
            "offset": self.offset,
        }

    @classmethod
    def from_dict(cls, doc: dict) -> "IsingModel":
        try:
            J = {(int(i), int(j)): float(q) for i, j, q in doc["J"]}
            return cls(doc["num_spins"], doc["h"], J, doc.get("offset", 0.0))
        except KeyError as exc:
            raise InputError(f"ising document is missing field {exc.args[0]!r}") from None


def eval_qubo(q: QuboModel, bits) -> float:
    x = np.asarray(bits)
    if x.ndim != 1 or x.size != q.num_bits:
        raise InputError(f"expected {q.num_bits} bits, got shape {x.shape}")
    return float(q.energies(x[None, :])[0])


def eval_ising(model: IsingModel, spins) -> float:
    s = np.asarray(spins, dtype=float)
    if s.ndim != 1 or s.size != model.num_spins:
        raise InputError(f"expected {model.num_spins} spins, got shape {s.shape}")
    return float(model.energies(s[None, :])[0])


def bits_to_spins(bits) -> np.ndarray:
    return (2 * np.asarray(bits, dtype=float) - 1) / 2


def all_bitstrings(m: int) -> np.ndarray:
    """Every m-bit string as rows, ordered by integer value (first column = MSB)."""
    codes = np.arange(2 ** m, dtype=np.int64)
    return ((codes[:, None] >> np.arange(m - 1, -1, -1)) & 1).astype(np.int8)


# --------------------------------------------------------------------------
# reductions


def slack_bits(b: float) -> int:
    """Number of binary slack variables needed to represent 0..b: ceil(log2(b + 1))."""
    if b < 0:
        raise InputError(f"slack encoding needs a non-negative right-hand side, got {b}")
    if float(b).is_integer():
        return int(b).bit_length()
    return math.ceil(math.log2(b + 1))


class _Builder:
    def __init__(self, m):
        self.m = m
        self.lin = np.zeros(m)
        self.quad: dict[tuple[int, int], float] = {}
        self.offset = 0.0
        self.obj_lin = np.zeros(m)
        self.obj_quad: dict[tuple[int, int], float] = {}
        self.squares = []

    def add_pair(self, i, j, q):
        if i == j:
            self.lin[i] += q
            return
        key = (i, j) if i < j else (j, i)
        self.quad[key] = self.quad.get(key, 0.0) + q

    def add_objective(self, i, j, q):
        """Objective term ``q x_i x_j`` (``i == j`` means linear)."""
        self.add_pair(i, j, q)
        if i == j:
            self.obj_lin[i] += q
        else:
            key = (i, j) if i < j else (j, i)
            self.obj_quad[key] = self.obj_quad.get(key, 0.0) + q

    def add_square(self, lam, const, terms):
        """Add ``lam * (const - sum_k a_k y_k)^2`` for ``terms = [(index, a_k), ...]``."""
        self.squares.append((lam, const, terms))
        self.offset += lam * const * const
        for idx, (i, a) in enumerate(terms):
            self.lin[i] += lam * (a * a - 2 * const * a)
            for j, b in terms[idx + 1:]:
                self.add_pair(i, j, 2 * lam * a * b)

    def build(self, names) -> QuboModel:
        coeffs = np.zeros((len(self.squares), self.m))
        for k, (_, _, terms) in enumerate(self.squares):
            for i, a in terms:
                coeffs[k, i] += a
        structure = PenaltyStructure(
            self.m, self.obj_lin.copy(), dict(self.obj_quad),
            np.array([sq[0] for sq in self.squares], dtype=float),
            np.array([sq[1] for sq in self.squares], dtype=float), coeffs)
        return QuboModel(self.m, self.lin, self.quad, self.offset, tuple(names), structure)


def blop_to_qubo(inst: BlopInstance, lambdas: Sequence[float] | float,
                 var_names: Sequence[str] | None = None) -> QuboModel:
    """Fold the constraints of ``inst`` into squared penalties.

    Every ``<=`` row j gets ``ceil(log2(b_j + 1))`` slack bits with weights
    1, 2, 4, ... appended after the original variables; equality rows get
    none.
    """
    lams = np.broadcast_to(np.asarray(lambdas, dtype=float), (inst.m,))
    if (lams <= 0).any():
        raise InputError("penalty multipliers must be positive")
    n = inst.n
    names = list(var_names) if var_names is not None else [f"x{i}" for i in range(n)]
    if len(names) != n:
        raise InputError(f"var_names has {len(names)} entries for {n} variables")
    slack_layout = []
    for j in range(inst.m):
        k = slack_bits(inst.b[j]) if inst.sense[j] == LE else 0
        slack_layout.append(k)
        names.extend(f"s{j}_{t}" for t in range(k))
    m = len(names)
    qb = _Builder(m)
    for i in range(n):
        qb.add_objective(i, i, float(inst.c[i]))
    nxt = n
    for j in range(inst.m):
        terms = [(i, float(a)) for i, a in enumerate(inst.A[j]) if a != 0]
        terms += [(nxt + t, float(2 ** t)) for t in range(slack_layout[j])]
        nxt += slack_layout[j]
        qb.add_square(lams[j], float(inst.b[j]), terms)
    return qb.build(names)


def kp_lambda(inst: KpInstance) -> float:
    """Smallest integer-step multiplier that keeps overloads unattractive: max v + 1."""
    return float(inst.values.max()) + 1.0


def kp_qubo(inst: KpInstance, lam: float | str = "auto") -> QuboModel:
    """``-sum v_i x_i + lam (W - sum w_i x_i - slack)^2`` with ``ceil(log2(W+1))`` slack bits."""
    if lam == "auto":
        lam = kp_lambda(inst)
    if not lam > 0:
        raise InputError(f"lambda must be positive, got {lam}")
    return blop_to_qubo(inst.to_blop(), [lam])


def kp_num_bits(n_items: int, capacity: float) -> int:
    return n_items + slack_bits(capacity)


def tsp_qubo(inst: TspInstance, lam: float | str = "auto") -> QuboModel:
    """Position encoding: bit ``i*n + k`` is "city i is visited at step k".

    Objective ``sum_{i,j} C_ij sum_k x_{i,k} x_{j,k+1}`` with cyclic steps,
    plus ``lam`` times the one-hot violations of every city row and every
    step column.
    """
    n = inst.n
    C = inst.cost
    cmax = float(C.max())
    if lam == "auto":
        lam = cmax + 1.0
    if not lam > cmax:
        raise InputError(f"lambda must exceed max cost {cmax}, got {lam}")
    qb = _Builder(n * n)
    for i in range(n):
        for j in range(n):
            if i == j or C[i, j] == 0:
                continue
            for k in range(n):
                qb.add_objective(i * n + k, j * n + (k + 1) % n, float(C[i, j]))
    for i in range(n):
        qb.add_square(lam, 1.0, [(i * n + k, 1.0) for k in range(n)])
    for k in range(n):
        qb.add_square(lam, 1.0, [(i * n + k, 1.0) for i in range(n)])
    return qb.build(f"x{i}_{k}" for i in range(n) for k in range(n))


def qubo_to_ising(q: QuboModel) -> IsingModel:
    """Substitute ``x = s + 1/2``; the constant part goes into the Ising offset."""
    h = q.linear.copy()
    offset = q.offset + q.linear.sum() / 2
    J = {}
    for (i, j), c in q.quadratic.items():
        J[(i, j)] = c
        h[i] += c / 2
        h[j] += c / 2
        offset += c / 4
    return IsingModel(q.num_bits, h, J, offset)
