"""Compiled inner loops for QUBO evaluation, enumeration and annealing.

Energies are always summed in the same order (linear terms by index, then
pairs in canonical order, then the offset) so that a bitstring evaluates to
the same float no matter which routine produced it.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def energies(X, lin, pi, pj, pq, offset):
    out = np.empty(X.shape[0])
    for r in range(X.shape[0]):
        e = 0.0
        for i in range(lin.size):
            if X[r, i]:
                e += lin[i]
        for p in range(pi.size):
            if X[r, pi[p]] and X[r, pj[p]]:
                e += pq[p]
        out[r] = e + offset
    return out


@njit(cache=True)
def _gray_walk(lin, Qs, mode, threshold, out):
    """Walk all 2^M strings in Gray-code order with incremental energies.

    mode 0 returns the minimum energy, mode 1 counts strings with energy
    <= threshold, mode 2 writes their integer codes into ``out``.
    """
    m = lin.size
    x = np.zeros(m, dtype=np.int8)
    field = lin.copy()
    e = 0.0
    best = 0.0
    code = 0
    count = 0
    if mode == 1 and e <= threshold:
        count += 1
    if mode == 2 and e <= threshold:
        out[count] = code
        count += 1
    for step in range(1, 1 << m):
        k = 0
        while not (step >> k) & 1:
            k += 1
        if x[k] == 0:
            e += field[k]
            x[k] = 1
            for j in range(m):
                field[j] += Qs[j, k]
        else:
            x[k] = 0
            for j in range(m):
                field[j] -= Qs[j, k]
            e -= field[k]
        # bit k of the code is variable k; MSB-first packing is done by the caller
        code ^= 1 << k
        if mode == 0:
            if e < best:
                best = e
        elif e <= threshold:
            if mode == 2:
                out[count] = code
            count += 1
    if mode == 0:
        return best
    return float(count)


def near_minimizers(lin, Qs, tol):
    """Integer codes (bit k = variable k) of every string within ``tol`` of the minimum."""
    dummy = np.zeros(1, dtype=np.int64)
    emin = _gray_walk(lin, Qs, 0, 0.0, dummy)
    thr = emin + tol
    count = int(_gray_walk(lin, Qs, 1, thr, dummy))
    out = np.empty(count, dtype=np.int64)
    _gray_walk(lin, Qs, 2, thr, out)
    return out


@njit(cache=True)
def anneal(lin, Qs, x0, betas, rng):
    """Single-flip Metropolis annealing, one independent chain per row of ``x0``.

    One sweep is M proposals, each flipping a uniformly chosen bit; beta is
    constant within a sweep and follows ``betas``. ``rng`` is a numpy
    Generator, consumed read after read.
    """
    reads, m = x0.shape
    out = x0.copy()
    field = np.empty(m)
    for r in range(reads):
        x = out[r]
        for i in range(m):
            field[i] = lin[i]
        for i in range(m):
            if x[i]:
                for j in range(m):
                    field[j] += Qs[j, i]
        for beta in betas:
            for _ in range(m):
                # scaling a double is much faster than rng.integers here
                i = int(rng.random() * m)
                delta = field[i] if x[i] == 0 else -field[i]
                if delta <= 0.0 or rng.random() < np.exp(-beta * delta):
                    sign = 1.0 if x[i] == 0 else -1.0
                    x[i] = 1 - x[i]
                    for j in range(m):
                        field[j] += sign * Qs[j, i]
    return out


@njit(cache=True)
def _penalty_bound(s, rhs, lam, lo, hi, d):
    total = 0.0
    for k in range(rhs.size):
        r = rhs[k] - s[k]
        if r < lo[k, d]:
            total += lam[k] * (lo[k, d] - r) ** 2
        elif r > hi[k, d]:
            total += lam[k] * (r - hi[k, d]) ** 2
    return total


@njit(cache=True)
def penalty_bb(obj_lin, obj_Qs, lam, rhs, coeffs, tol, max_solutions, max_nodes):
    """Depth-first search for every minimizer of objective + squared penalties.

    Bits are fixed in index order, 1 before 0.  A node's lower bound is the
    objective of the fixed ones, plus every negative free field and free
    negative pair, plus each penalty's squared distance from its target to
    the interval the free bits can still reach.  Nodes whose bound exceeds
    the incumbent by more than ``tol`` are dropped, so ties are all kept.

    Returns (solutions, count, best, status) where status 0 is done,
    1 means too many minimizers and 2 means the node limit was hit.
    """
    m = obj_lin.size
    nk = rhs.size
    negpair = np.zeros(m + 1)
    for d in range(m - 1, -1, -1):
        acc = 0.0
        for j in range(d + 1, m):
            if obj_Qs[d, j] < 0:
                acc += obj_Qs[d, j]
        negpair[d] = negpair[d + 1] + acc
    lo = np.zeros((nk, m + 1))
    hi = np.zeros((nk, m + 1))
    for k in range(nk):
        for d in range(m - 1, -1, -1):
            a = coeffs[k, d]
            lo[k, d] = lo[k, d + 1] + min(a, 0.0)
            hi[k, d] = hi[k, d + 1] + max(a, 0.0)

    x = np.zeros(m, dtype=np.int8)
    field = obj_lin.copy()
    s = np.zeros(nk)
    efix = 0.0
    best = np.inf
    sols = np.zeros((max_solutions, m), dtype=np.int8)
    count = 0
    stage = np.zeros(m + 1, dtype=np.int8)
    nodes = 0
    d = 0
    while d >= 0:
        if d == m:
            e = efix
            for k in range(nk):
                e += lam[k] * (rhs[k] - s[k]) ** 2
            if e < best - tol:
                best = e
                count = 0
            if e <= best + tol:
                if count == max_solutions:
                    return sols, count, best, 1
                sols[count, :] = x
                count += 1
            d -= 1
            continue
        st = stage[d]
        if x[d] == 1:
            # undo the 1 branch before trying 0 or backtracking
            x[d] = 0
            for j in range(m):
                field[j] -= obj_Qs[j, d]
            efix -= field[d]
            for k in range(nk):
                s[k] -= coeffs[k, d]
        if st == 2:
            stage[d] = 0
            d -= 1
            continue
        stage[d] = st + 1
        if st == 0:
            x[d] = 1
            efix += field[d]
            for j in range(m):
                field[j] += obj_Qs[j, d]
            for k in range(nk):
                s[k] += coeffs[k, d]
        nodes += 1
        if nodes > max_nodes:
            return sols, count, best, 2
        bound = efix + negpair[d + 1]
        for j in range(d + 1, m):
            if field[j] < 0:
                bound += field[j]
        bound += _penalty_bound(s, rhs, lam, lo, hi, d + 1)
        if bound > best + tol:
            continue
        d += 1
    return sols, count, best, 0
