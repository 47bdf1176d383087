"""Problem instances: generic binary linear problems, knapsack and TSP.

Everything is stored in the minimization convention. A knapsack with
values ``v`` is the binary linear problem ``min -v.x  s.t.  w.x <= W``.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence, Union

import numpy as np

from .errors import InputError

FEAS_TOL = 1e-9

LE = "<="
EQ = "="
_SENSES = (LE, EQ)


def _frozen(a, dtype=float) -> np.ndarray:
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


def as_bits(bits, n: int | None = None) -> np.ndarray:
    """Validate a 0/1 vector and return it as an int8 array."""
    arr = np.asarray(bits)
    if arr.ndim != 1:
        raise InputError(f"bit vector must be one-dimensional, got shape {arr.shape}")
    if n is not None and arr.shape[0] != n:
        raise InputError(f"expected {n} bits, got {arr.shape[0]}")
    if arr.size and not np.isin(arr, (0, 1)).all():
        raise InputError("bit vector entries must be 0 or 1")
    return arr.astype(np.int8)


@dataclass(frozen=True, eq=False)
class BlopInstance:
    """``min c.x  s.t.  A x (<= | =) b,  x in {0,1}^N``."""

    c: np.ndarray
    A: np.ndarray
    b: np.ndarray
    sense: tuple[str, ...] = ()

    def __post_init__(self):
        c = np.asarray(self.c, dtype=float)
        if c.ndim != 1 or c.size < 1:
            raise InputError("c must be a non-empty vector")
        b = np.asarray(self.b, dtype=float).reshape(-1)
        m = b.size
        A = np.asarray(self.A, dtype=float)
        if m == 0:
            A = A.reshape(0, c.size)
        if A.ndim != 2 or A.shape != (m, c.size):
            raise InputError(f"A must have shape ({m}, {c.size}), got {A.shape}")
        sense = tuple(self.sense) if len(self.sense) else (LE,) * m
        if len(sense) != m:
            raise InputError(f"sense has {len(sense)} entries for {m} rows")
        for s in sense:
            if s not in _SENSES:
                raise InputError(f"unknown constraint sense {s!r}; use '<=' or '='")
        if not (np.isfinite(c).all() and np.isfinite(A).all() and np.isfinite(b).all()):
            raise InputError("coefficients must be finite")
        object.__setattr__(self, "c", _frozen(c))
        object.__setattr__(self, "A", _frozen(A))
        object.__setattr__(self, "b", _frozen(b))
        object.__setattr__(self, "sense", sense)

    @property
    def n(self) -> int:
        return self.c.size

    @property
    def m(self) -> int:
        return self.b.size


@dataclass(frozen=True, eq=False)
class KpInstance:
    values: np.ndarray
    weights: np.ndarray
    capacity: float

    def __post_init__(self):
        v = np.asarray(self.values, dtype=float)
        w = np.asarray(self.weights, dtype=float)
        if v.ndim != 1 or v.size < 1 or v.shape != w.shape:
            raise InputError("values and weights must be non-empty vectors of equal length")
        if (v <= 0).any() or (w <= 0).any():
            raise InputError("knapsack values and weights must be positive")
        if not self.capacity > 0:
            raise InputError(f"capacity must be positive, got {self.capacity}")
        object.__setattr__(self, "values", _frozen(v))
        object.__setattr__(self, "weights", _frozen(w))
        object.__setattr__(self, "capacity", float(self.capacity))

    @property
    def n(self) -> int:
        return self.values.size

    def to_blop(self) -> BlopInstance:
        return BlopInstance(-self.values, self.weights[None, :], [self.capacity], (LE,))

    def objective(self, bits) -> float:
        return -float(self.values @ as_bits(bits, self.n))

    def weight(self, bits) -> float:
        return float(self.weights @ as_bits(bits, self.n))

    def is_feasible(self, bits) -> bool:
        return self.weight(bits) <= self.capacity + FEAS_TOL


@dataclass(frozen=True, eq=False)
class TspInstance:
    """Directed TSP; ``cost[i, j]`` is the cost of travelling i -> j. City 0 is the depot."""

    cost: np.ndarray

    def __post_init__(self):
        C = np.asarray(self.cost, dtype=float)
        if C.ndim != 2 or C.shape[0] != C.shape[1]:
            raise InputError(f"cost must be square, got shape {C.shape}")
        if C.shape[0] < 3:
            raise InputError(f"TSP needs at least 3 cities, got {C.shape[0]}")
        if not np.isfinite(C).all() or (C < 0).any():
            raise InputError("costs must be finite and non-negative")
        if np.any(np.diag(C) != 0):
            raise InputError("cost matrix must have a zero diagonal")
        object.__setattr__(self, "cost", _frozen(C))

    @property
    def n(self) -> int:
        return self.cost.shape[0]


@dataclass(frozen=True)
class BitSolution:
    bits: tuple[int, ...]
    objective: float
    feasible: bool


@dataclass(frozen=True)
class Tour:
    order: tuple[int, ...]

    def __post_init__(self):
        order = tuple(int(c) for c in self.order)
        if sorted(order) != list(range(len(order))):
            raise InputError(f"tour {order} is not a permutation of 0..{len(order) - 1}")
        if order[0] != 0:
            raise InputError("tour must start at the depot (city 0)")
        object.__setattr__(self, "order", order)

    @classmethod
    def from_cycle(cls, cycle: Sequence[int]) -> "Tour":
        """Rotate any cyclic ordering so that it starts at the depot."""
        cycle = [int(c) for c in cycle]
        if 0 not in cycle:
            raise InputError("cycle does not visit the depot")
        k = cycle.index(0)
        return cls(tuple(cycle[k:] + cycle[:k]))

    @property
    def n(self) -> int:
        return len(self.order)

    def edges(self) -> list[tuple[int, int]]:
        o = self.order
        return [(o[k], o[(k + 1) % len(o)]) for k in range(len(o))]

    def edge_matrix(self) -> np.ndarray:
        x = np.zeros((self.n, self.n), dtype=np.int8)
        for i, j in self.edges():
            x[i, j] = 1
        return x

    def position_matrix(self) -> np.ndarray:
        """``x[city, step] = 1`` when ``city`` is visited at ``step``."""
        x = np.zeros((self.n, self.n), dtype=np.int8)
        for step, city in enumerate(self.order):
            x[city, step] = 1
        return x


# --------------------------------------------------------------------------
# evaluation


def evaluate_blop(inst: BlopInstance, bits) -> tuple[float, bool]:
    x = as_bits(bits, inst.n).astype(float)
    objective = float(inst.c @ x)
    if inst.m == 0:
        return objective, True
    lhs = inst.A @ x
    feasible = True
    for j, s in enumerate(inst.sense):
        if s == LE:
            ok = lhs[j] <= inst.b[j] + FEAS_TOL
        else:
            ok = abs(lhs[j] - inst.b[j]) <= FEAS_TOL
        feasible = feasible and bool(ok)
    return objective, feasible


def blop_solution(inst: BlopInstance, bits) -> BitSolution:
    z, ok = evaluate_blop(inst, bits)
    return BitSolution(tuple(int(b) for b in bits), z, ok)


def kp_solution(inst: KpInstance, bits) -> BitSolution:
    return BitSolution(tuple(int(b) for b in bits), inst.objective(bits), inst.is_feasible(bits))


def tour_cost(inst: TspInstance, tour: Tour | Sequence[int]) -> float:
    if not isinstance(tour, Tour):
        tour = Tour(tuple(tour))
    if tour.n != inst.n:
        raise InputError(f"tour visits {tour.n} cities, instance has {inst.n}")
    return float(sum(inst.cost[i, j] for i, j in tour.edges()))


def validate_tour(inst: TspInstance, assignment, encoding: str = "edge") -> bool:
    """Check an n x n 0/1 matrix against the TSP constraints.

    ``encoding="edge"`` reads ``x[i, j] = 1`` as the edge i -> j and requires
    one in/out edge per city plus a single cycle through all cities (the
    subtour-elimination family). ``encoding="position"`` reads ``x[i, k]`` as
    "city i at step k"; every permutation matrix is then a valid tour.
    """
    x = np.asarray(assignment)
    n = inst.n
    if x.shape != (n, n) or not np.isin(x, (0, 1)).all():
        return False
    if not ((x.sum(axis=0) == 1).all() and (x.sum(axis=1) == 1).all()):
        return False
    if encoding == "position":
        return True
    if encoding != "edge":
        raise InputError(f"unknown tour encoding {encoding!r}")
    succ = x.argmax(axis=1)
    city, length = 0, 0
    while True:
        city = int(succ[city])
        length += 1
        if city == 0:
            break
    return length == n


def tour_from_position_matrix(x) -> Tour | None:
    """Decode a position-encoded assignment; ``None`` if it is not a permutation matrix."""
    x = np.asarray(x)
    n = x.shape[0]
    if x.shape != (n, n) or not ((x.sum(axis=0) == 1).all() and (x.sum(axis=1) == 1).all()):
        return None
    city_at_step = x.argmax(axis=0)
    return Tour.from_cycle(city_at_step.tolist())


# --------------------------------------------------------------------------
# toy families


def kp_toy(n: int, w_cap: int) -> KpInstance:
    """Items with value i and unit weight, i = 1..n, capacity ``w_cap``."""
    if not (isinstance(n, (int, np.integer)) and isinstance(w_cap, (int, np.integer))):
        raise InputError("kp_toy takes integer sizes")
    if w_cap < 1:
        raise InputError("capacity must be at least 1")
    if n < w_cap:
        raise InputError(f"kp_toy needs n >= w_cap, got n={n}, w_cap={w_cap}")
    return KpInstance(np.arange(1, n + 1), np.ones(n), w_cap)


def kp_toy_optimum(n: int, w_cap: int) -> float:
    """Closed form optimum of :func:`kp_toy`: take the last ``w_cap`` items."""
    return -w_cap * (n + (1 - w_cap) / 2)


def tsp_toy(n: int) -> TspInstance:
    """Cyclic costs: going u -> v costs (v - u) mod n, so 0,1,...,n-1 is optimal with cost n."""
    if n < 3:
        raise InputError(f"tsp_toy needs n >= 3, got {n}")
    u = np.arange(n)
    return TspInstance((u[None, :] - u[:, None]) % n)


def random_kp(rng: np.random.Generator, n: int, low: int = 1, high: int = 20) -> KpInstance:
    v = rng.integers(low, high + 1, size=n)
    w = rng.integers(low, high + 1, size=n)
    return KpInstance(v, w, math.ceil(w.sum() / 2))


def random_tsp(rng: np.random.Generator, n: int, low: int = 1, high: int = 9) -> TspInstance:
    C = rng.integers(low, high + 1, size=(n, n)).astype(float)
    np.fill_diagonal(C, 0)
    return TspInstance(C)


# --------------------------------------------------------------------------
# file format

Instance = Union[BlopInstance, KpInstance, TspInstance]


def instance_to_dict(inst: Instance) -> dict:
    if isinstance(inst, KpInstance):
        return {"type": "kp", "values": inst.values.tolist(), "weights": inst.weights.tolist(),
                "capacity": inst.capacity}
    if isinstance(inst, TspInstance):
        return {"type": "tsp", "n": inst.n, "cost": inst.cost.tolist()}
    if isinstance(inst, BlopInstance):
        return {"type": "blop", "c": inst.c.tolist(), "A": inst.A.tolist(), "b": inst.b.tolist(),
                "sense": list(inst.sense)}
    raise InputError(f"cannot serialize {type(inst).__name__}")


def _field(doc: dict, name: str):
    if name not in doc:
        raise InputError(f"instance is missing field {name!r}")
    return doc[name]


def instance_from_dict(doc: dict) -> Instance:
    if not isinstance(doc, dict):
        raise InputError("instance document must be a JSON object")
    kind = doc.get("type")
    try:
        if kind == "kp":
            return KpInstance(_field(doc, "values"), _field(doc, "weights"), _field(doc, "capacity"))
        if kind == "tsp":
            cost = _field(doc, "cost")
            if "n" in doc and len(cost) != doc["n"]:
                raise InputError(f"field 'n' = {doc['n']} disagrees with cost matrix size {len(cost)}")
            return TspInstance(cost)
        if kind == "blop":
            return BlopInstance(_field(doc, "c"), _field(doc, "A"), _field(doc, "b"),
                                tuple(doc.get("sense", ())))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"malformed {kind} instance: {exc}") from exc
    raise InputError(f"unknown instance type {kind!r}; expected 'kp', 'tsp' or 'blop'")


def save_instance(inst: Instance, path) -> None:
    Path(path).write_text(json.dumps(instance_to_dict(inst), indent=1) + "\n")


def load_instance(path) -> Instance:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except FileNotFoundError:
        raise InputError(f"instance file {str(path)!r} does not exist") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"instance file {str(path)!r} is not valid JSON: {exc}") from None
    return instance_from_dict(doc)
