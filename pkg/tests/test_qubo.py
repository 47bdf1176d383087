import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridbb.errors import InputError
from hybridbb.problem import BlopInstance, KpInstance, TspInstance, kp_toy, random_kp, tsp_toy
from hybridbb.qubo import (
    IsingModel,
    QuboModel,
    all_bitstrings,
    bits_to_spins,
    blop_to_qubo,
    eval_ising,
    eval_qubo,
    kp_lambda,
    kp_num_bits,
    kp_qubo,
    qubo_to_ising,
    slack_bits,
    tsp_qubo,
)

from oracles import kp_brute, qubo_brute, qubo_energy, tsp_brute


def _brute(q):
    return qubo_brute(q.linear.tolist(), q.quadratic, q.offset)


def _random_qubo(rng, m):
    quad = {(i, j): float(rng.uniform(-1, 1)) for i in range(m) for j in range(i + 1, m) if rng.random() < 0.6}
    return QuboModel(m, rng.uniform(-1, 1, size=m), quad, float(rng.uniform(-2, 2)))


class TestModel:
    def test_rejects_lower_triangle(self):
        with pytest.raises(InputError):
            QuboModel(2, [0, 0], {(1, 0): 1.0})

    def test_rejects_diagonal_key(self):
        with pytest.raises(InputError):
            QuboModel(2, [0, 0], {(1, 1): 1.0})

    def test_linear_length(self):
        with pytest.raises(InputError):
            QuboModel(3, [0, 0], {})

    def test_dict_round_trip(self):
        q = kp_qubo(kp_toy(4, 2))
        back = QuboModel.from_dict(q.to_dict())
        X = all_bitstrings(q.num_bits)
        np.testing.assert_array_equal(back.energies(X), q.energies(X))
        assert back.var_names == q.var_names

    def test_missing_field(self):
        with pytest.raises(InputError, match="'linear'"):
            QuboModel.from_dict({"num_bits": 1, "quadratic": []})

    def test_all_bitstrings_order(self):
        np.testing.assert_array_equal(all_bitstrings(2), [[0, 0], [0, 1], [1, 0], [1, 1]])

    @given(st.integers(1, 8), st.integers(0, 2 ** 31 - 1))
    def test_energies_match_naive_sum(self, m, seed):
        q = _random_qubo(np.random.default_rng(seed), m)
        for bits in itertools.product((0, 1), repeat=m):
            assert eval_qubo(q, bits) == pytest.approx(qubo_energy(q.linear, q.quadratic, q.offset, bits), abs=1e-12)


class TestBlopReduction:
    def test_kp_two_items(self):
        q = kp_qubo(KpInstance([1, 2], [1, 1], 1), lam=3.0)
        assert q.num_bits == 3
        emin, arg = _brute(q)
        assert emin == -2 and arg == [(0, 1, 0)]

    def test_no_constraints(self):
        q = blop_to_qubo(BlopInstance([3, -1], np.zeros((0, 2)), []), [])
        assert q.quadratic == {} and q.offset == 0
        for bits in itertools.product((0, 1), repeat=2):
            assert eval_qubo(q, bits) == 3 * bits[0] - bits[1]

    def test_saturated_feasible_has_no_penalty(self):
        inst = kp_toy(4, 2)
        q = kp_qubo(inst)
        # items 3 and 4, load 2 = W, slack 0
        assert eval_qubo(q, (0, 0, 1, 1, 0, 0)) == -7

    def test_single_item(self):
        q = kp_qubo(KpInstance([1], [1], 1))
        emin, arg = _brute(q)
        assert emin == -1 and arg == [(1, 0)]

    def test_penalty_only_residual(self):
        q = blop_to_qubo(BlopInstance([0.0], [[1]], [1], ("<=",)), [1.0])
        assert q.num_bits == 2 and eval_qubo(q, (0, 0)) == 1

    def test_lambda_must_be_positive(self):
        with pytest.raises(InputError):
            kp_qubo(kp_toy(3, 2), lam=0)

    def test_negative_rhs_rejected(self):
        with pytest.raises(InputError):
            blop_to_qubo(BlopInstance([1], [[1]], [-1], ("<=",)), [1.0])

    def test_equality_rows_need_no_slack(self):
        q = blop_to_qubo(BlopInstance([1, 1, 1], [[1, 1, 1]], [2], ("=",)), [5.0])
        assert q.num_bits == 3

    def test_slack_bits(self):
        assert [slack_bits(b) for b in (0, 1, 2, 3, 4, 7, 8, 10)] == [0, 1, 2, 2, 3, 3, 4, 4]

    def test_full_size_for_25_10(self):
        q = kp_qubo(kp_toy(25, 10))
        assert kp_lambda(kp_toy(25, 10)) == 26
        assert q.num_bits == 29 == kp_num_bits(25, 10)

    def test_var_names(self):
        assert kp_qubo(kp_toy(3, 2)).var_names == ("x0", "x1", "x2", "s0_0", "s0_1")

    @pytest.mark.parametrize("n,w", [(n, w) for n in range(1, 11) for w in range(1, min(n, 7) + 1)])
    def test_toy_minimizer_projects_to_optimum(self, n, w):
        inst = kp_toy(n, w)
        q = kp_qubo(inst)
        z, opt = kp_brute(inst.values, inst.weights, inst.capacity)
        emin, arg = _brute(q) if q.num_bits <= 14 else (None, None)
        if arg is None:
            pytest.skip("enumeration in the oracle is limited to 14 bits")
        for bits in arg:
            assert tuple(bits[:n]) in opt

    @given(st.integers(1, 7), st.integers(0, 2 ** 31 - 1))
    def test_random_kp_minimizer_is_optimal(self, n, seed):
        rng = np.random.default_rng(seed)
        inst = KpInstance(rng.integers(1, 10, size=n), rng.integers(1, 5, size=n), int(rng.integers(1, 8)))
        z, opt = kp_brute(inst.values, inst.weights, inst.capacity)
        _, arg = _brute(kp_qubo(inst))
        assert all(tuple(bits[:n]) in opt for bits in arg)

    def test_small_lambda_breaks_feasibility(self):
        inst = kp_toy(4, 2)
        _, arg = _brute(kp_qubo(inst, lam=0.1))
        assert all(sum(bits[:4]) > 2 for bits in arg)


class TestTspReduction:
    def test_toy_3(self):
        q = tsp_qubo(tsp_toy(3))
        emin, arg = _brute(q)
        assert emin == 3 and len(arg) == 3

    def test_uniform_costs(self):
        q = tsp_qubo(TspInstance(5 * (np.ones((3, 3)) - np.eye(3))))
        emin, arg = _brute(q)
        assert emin == 15 and len(arg) == 6

    def test_lambda_must_exceed_costs(self):
        with pytest.raises(InputError):
            tsp_qubo(tsp_toy(4), lam=3.0)

    def test_valid_tour_has_no_penalty(self):
        inst = tsp_toy(4)
        for perm in itertools.permutations(range(4)):
            x = np.zeros((4, 4), dtype=int)
            x[list(perm), range(4)] = 1
            order = [perm[k] for k in range(4)]
            cost = sum(inst.cost[order[k], order[(k + 1) % 4]] for k in range(4))
            assert eval_qubo(tsp_qubo(inst), x.ravel()) == cost

    @pytest.mark.parametrize("n", [3, 4])
    def test_invalid_strings_cost_more_than_optimum(self, n):
        inst = tsp_toy(n)
        q = tsp_qubo(inst)
        opt, _ = tsp_brute(inst.cost)
        X = all_bitstrings(n * n)
        E = q.energies(X)
        M = X.reshape(-1, n, n)
        valid = (M.sum(axis=1) == 1).all(axis=1) & (M.sum(axis=2) == 1).all(axis=1)
        assert E[~valid].min() > opt
        # exactly n minimizers: the rotations of the ascending tour
        assert int((E <= opt + 1e-9).sum()) == n

    @given(st.integers(0, 2 ** 31 - 1))
    def test_random_3_city_minimum(self, seed):
        rng = np.random.default_rng(seed)
        C = rng.integers(1, 10, size=(3, 3)).astype(float)
        np.fill_diagonal(C, 0)
        emin, _ = _brute(tsp_qubo(TspInstance(C)))
        assert emin == tsp_brute(C)[0]


class TestStructure:
    """The penalty decomposition recorded by the builders reproduces the model."""

    @pytest.mark.parametrize("q", [kp_qubo(kp_toy(5, 3)), tsp_qubo(tsp_toy(3)),
                                   blop_to_qubo(BlopInstance([1, -2, 3], [[1, 2, 1], [1, 0, 1]], [2, 1], ("<=", "=")), [4.0, 2.0])],
                             ids=["kp", "tsp", "blop"])
    def test_decomposition(self, q):
        st_ = q.structure
        X = all_bitstrings(q.num_bits).astype(float)
        obj = X @ st_.objective_linear + 0.5 * np.einsum("ri,ij,rj->r", X, st_.objective_matrix(), X)
        pen = ((st_.rhs[None, :] - X @ st_.coeffs.T) ** 2 * st_.lam[None, :]).sum(axis=1)
        np.testing.assert_allclose(obj + pen, q.energies(X.astype(np.int8)), atol=1e-9)


class TestIsing:
    def test_spin_map(self):
        np.testing.assert_array_equal(bits_to_spins([0, 1]), [-0.5, 0.5])

    def test_single_bit(self):
        m = qubo_to_ising(QuboModel(1, [3.0], {}))
        assert m.h[0] == 3.0 and m.offset == 1.5

    def test_h_only(self):
        m = IsingModel(2, [1.0, 1.0], {})
        assert eval_ising(m, [-0.5, -0.5]) == -1.0

    def test_toy_kp_exhaustive(self):
        q = kp_qubo(kp_toy(4, 2))
        m = qubo_to_ising(q)
        X = all_bitstrings(q.num_bits)
        assert np.abs(q.energies(X) - m.energies(bits_to_spins(X))).max() == 0.0

    def test_dict_round_trip(self):
        m = qubo_to_ising(kp_qubo(kp_toy(3, 2)))
        back = IsingModel.from_dict(m.to_dict())
        S = bits_to_spins(all_bitstrings(5))
        np.testing.assert_array_equal(back.energies(S), m.energies(S))

    @given(st.integers(1, 10), st.integers(0, 2 ** 31 - 1))
    def test_offset_correct_on_random_models(self, m, seed):
        q = _random_qubo(np.random.default_rng(seed), m)
        ising = qubo_to_ising(q)
        X = all_bitstrings(m)
        np.testing.assert_allclose(ising.energies(bits_to_spins(X)), q.energies(X), atol=1e-12)

    @given(st.integers(1, 9), st.integers(0, 2 ** 31 - 1))
    def test_random_kp_models(self, n, seed):
        q = kp_qubo(random_kp(np.random.default_rng(seed), n))
        if q.num_bits > 12:
            return
        X = all_bitstrings(q.num_bits)
        np.testing.assert_allclose(qubo_to_ising(q).energies(bits_to_spins(X)), q.energies(X), atol=1e-9)
