import itertools
import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from hybridbb.errors import InputError
from hybridbb.problem import (
    BlopInstance,
    KpInstance,
    Tour,
    TspInstance,
    evaluate_blop,
    instance_from_dict,
    instance_to_dict,
    kp_toy,
    kp_toy_optimum,
    load_instance,
    save_instance,
    tour_cost,
    tour_from_position_matrix,
    tsp_toy,
    validate_tour,
)

from oracles import kp_brute, tsp_brute

SMALL_BLOP = BlopInstance([-1, -2, -3], [[1, 1, 1]], [2], ("<=",))


class TestEvaluate:
    def test_feasible_minimum(self):
        assert evaluate_blop(SMALL_BLOP, (0, 1, 1)) == (-5.0, True)

    def test_overloaded(self):
        assert evaluate_blop(SMALL_BLOP, (1, 1, 1)) == (-6.0, False)

    def test_all_zero(self):
        assert evaluate_blop(SMALL_BLOP, (0, 0, 0)) == (0.0, True)

    def test_length_mismatch(self):
        with pytest.raises(InputError):
            evaluate_blop(SMALL_BLOP, (0, 1))

    def test_equality_rows(self):
        inst = BlopInstance([1, 1], [[1, 1]], [1], ("=",))
        assert evaluate_blop(inst, (1, 0)) == (1.0, True)
        assert not evaluate_blop(inst, (1, 1))[1]

    @given(st.integers(1, 6), st.integers(0, 2 ** 31 - 1))
    def test_agrees_with_direct_formula(self, n, seed):
        rng = np.random.default_rng(seed)
        c = rng.integers(-5, 6, size=n)
        A = rng.integers(0, 4, size=(2, n))
        b = rng.integers(0, 8, size=2)
        inst = BlopInstance(c, A, b, ("<=", "<="))
        for bits in itertools.product((0, 1), repeat=n):
            x = np.array(bits)
            assert evaluate_blop(inst, bits) == (float(c @ x), bool((A @ x <= b).all()))


class TestInstances:
    def test_blop_shape_checks(self):
        with pytest.raises(InputError):
            BlopInstance([1, 2], [[1, 1, 1]], [1], ("<=",))
        with pytest.raises(InputError):
            BlopInstance([1], [[1]], [1], (">=",))

    def test_kp_needs_positive_data(self):
        with pytest.raises(InputError):
            KpInstance([1, 0], [1, 1], 1)
        with pytest.raises(InputError):
            KpInstance([1, 1], [1, -1], 1)

    def test_tsp_checks(self):
        with pytest.raises(InputError):
            TspInstance([[0, 1], [1, 0]])
        with pytest.raises(InputError):
            TspInstance([[1, 1, 1], [1, 0, 1], [1, 1, 0]])
        with pytest.raises(InputError):
            TspInstance([[0, -1, 1], [1, 0, 1], [1, 1, 0]])

    def test_kp_as_blop(self):
        inst = kp_toy(5, 2)
        blop = inst.to_blop()
        np.testing.assert_array_equal(blop.c, -np.arange(1, 6))
        assert blop.sense == ("<=",)


class TestToys:
    def test_kp_toy_25_10(self):
        assert kp_toy_optimum(25, 10) == -205

    def test_kp_toy_5_2(self):
        inst = kp_toy(5, 2)
        z, arg = kp_brute(inst.values, inst.weights, inst.capacity)
        assert z == -9 and arg == [(0, 0, 0, 1, 1)]

    def test_kp_toy_1_1(self):
        assert kp_toy_optimum(1, 1) == -1

    def test_kp_toy_rejects_small_n(self):
        with pytest.raises(InputError):
            kp_toy(2, 3)

    @pytest.mark.parametrize("n,w", [(n, w) for n in range(1, 13) for w in range(1, n + 1)])
    def test_closed_form_matches_brute_force(self, n, w):
        inst = kp_toy(n, w)
        assert kp_brute(inst.values, inst.weights, inst.capacity)[0] == kp_toy_optimum(n, w)

    @pytest.mark.parametrize("n", [3, 4, 5, 6, 7])
    def test_tsp_toy_ascending_is_optimal(self, n):
        z, tours = tsp_brute(tsp_toy(n).cost)
        assert z == n and tours == [tuple(range(n))]

    def test_tsp_toy_rejects_small(self):
        with pytest.raises(InputError):
            tsp_toy(2)


class TestTours:
    def test_costs(self):
        inst = tsp_toy(3)
        assert tour_cost(inst, (0, 1, 2)) == 3
        assert tour_cost(inst, (0, 2, 1)) == 6

    def test_uniform_costs(self):
        C = 4 * (np.ones((5, 5)) - np.eye(5))
        inst = TspInstance(C)
        for perm in itertools.permutations(range(1, 5)):
            assert tour_cost(inst, (0,) + perm) == 20

    def test_not_a_permutation(self):
        with pytest.raises(InputError):
            Tour((0, 1, 1))
        with pytest.raises(InputError):
            Tour((1, 0, 2))

    def test_from_cycle(self):
        assert Tour.from_cycle([2, 0, 1]).order == (0, 1, 2)

    def test_identity_position_matrix(self):
        assert validate_tour(tsp_toy(3), np.eye(3, dtype=int), encoding="position")

    def test_two_subtours_rejected(self):
        x = np.zeros((4, 4), dtype=int)
        x[0, 1] = x[1, 0] = x[2, 3] = x[3, 2] = 1
        assert not validate_tour(tsp_toy(4), x, encoding="edge")

    def test_all_zero_rejected(self):
        z = np.zeros((4, 4), dtype=int)
        assert not validate_tour(tsp_toy(4), z, encoding="edge")
        assert not validate_tour(tsp_toy(4), z, encoding="position")

    @pytest.mark.parametrize("n", [3, 4, 5])
    def test_edge_validity_is_single_cycle(self, n):
        inst = tsp_toy(n)
        for perm in itertools.permutations(range(n)):
            x = np.zeros((n, n), dtype=int)
            x[np.arange(n), perm] = 1
            # independent cycle decomposition of the successor map
            seen, cycles = set(), 0
            for start in range(n):
                if start in seen:
                    continue
                cycles += 1
                c = start
                while c not in seen:
                    seen.add(c)
                    c = perm[c]
            single = cycles == 1 and all(perm[i] != i for i in range(n))
            assert validate_tour(inst, x, encoding="edge") == single

    @given(st.permutations(range(1, 6)))
    def test_cost_equals_edge_encoding(self, perm):
        inst = tsp_toy(6)
        tour = Tour((0, *perm))
        assert tour_cost(inst, tour) == float((inst.cost * tour.edge_matrix()).sum())

    @given(st.permutations(range(1, 6)))
    def test_position_round_trip(self, perm):
        tour = Tour((0, *perm))
        assert tour_from_position_matrix(tour.position_matrix()) == tour


class TestFiles:
    @pytest.mark.parametrize("inst", [kp_toy(5, 2), tsp_toy(4), SMALL_BLOP])
    def test_round_trip(self, tmp_path, inst):
        path = tmp_path / "inst.json"
        save_instance(inst, path)
        back = load_instance(path)
        assert instance_to_dict(back) == instance_to_dict(inst)

    def test_missing_file(self, tmp_path):
        with pytest.raises(InputError, match="does not exist"):
            load_instance(tmp_path / "nope.json")

    def test_bad_json(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text("{not json")
        with pytest.raises(InputError, match="not valid JSON"):
            load_instance(path)

    def test_missing_field_is_named(self):
        with pytest.raises(InputError, match="'capacity'"):
            instance_from_dict({"type": "kp", "values": [1], "weights": [1]})

    def test_unknown_type(self):
        with pytest.raises(InputError, match="unknown instance type"):
            instance_from_dict(json.loads('{"type": "vrp"}'))
