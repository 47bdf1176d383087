import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hybridbb.errors import BudgetError, InputError
from hybridbb.problem import BlopInstance, kp_toy, random_kp, tsp_toy
from hybridbb.qubo import QuboModel, blop_to_qubo, kp_qubo, tsp_qubo
from hybridbb.samplers import (
    ExactSampler,
    RandomSampler,
    SampleSet,
    SamplerParams,
    SimulatedAnnealingSampler,
    make_sampler,
    sample_exact,
    sample_exact_structured,
    sample_random_baseline,
    sample_random_tour_baseline,
    sample_sa,
    sample_uniform,
)

from oracles import qubo_brute, qubo_energy


def _random_qubo(rng, m):
    quad = {(i, j): float(rng.uniform(-1, 1)) for i in range(m) for j in range(i + 1, m)}
    return QuboModel(m, rng.uniform(-1, 1, size=m), quad)


def _check_bookkeeping(q, ss):
    assert sum(e.occurrences for e in ss.entries) == ss.total_reads
    energies = [e.energy for e in ss.entries]
    assert energies == sorted(energies)
    for e in ss.entries:
        assert e.energy == float(q.energies(np.array([e.bits], dtype=np.int8))[0])
        assert e.energy == pytest.approx(qubo_energy(q.linear, q.quadratic, q.offset, e.bits), abs=1e-9)


class TestExact:
    def test_kp_toy_4_2(self):
        ss = sample_exact(kp_qubo(kp_toy(4, 2)))
        assert len(ss) == 1 and ss.total_reads == 1
        assert ss.first.bits[:4] == (0, 0, 1, 1) and ss.first.energy == -7

    def test_tsp_toy_3(self):
        ss = sample_exact(tsp_qubo(tsp_toy(3)))
        assert len(ss) == 3 and ss.lowest_energy == 3
        assert all(e.occurrences == 1 for e in ss.entries)

    def test_constant_model(self):
        ss = sample_exact(QuboModel(4, np.zeros(4), {}, 5.0))
        assert len(ss) == 16 and all(e.energy == 5 for e in ss.entries)

    def test_cap(self):
        with pytest.raises(BudgetError, match="24"):
            sample_exact(QuboModel(25, np.zeros(25), {}))

    def test_ties_are_lexicographic(self):
        ss = sample_exact(QuboModel(2, [0.0, 0.0], {}))
        assert [e.bits for e in ss.entries] == [(0, 0), (0, 1), (1, 0), (1, 1)]

    @given(st.integers(1, 12), st.integers(0, 2 ** 31 - 1))
    def test_matches_oracle_on_random_models(self, m, seed):
        q = _random_qubo(np.random.default_rng(seed), m)
        emin, arg = qubo_brute(q.linear.tolist(), q.quadratic, 0.0)
        ss = sample_exact(q)
        assert ss.lowest_energy == pytest.approx(emin, abs=1e-12)
        assert [e.bits for e in ss.entries] == arg
        _check_bookkeeping(q, ss)

    @pytest.mark.parametrize("m", [14, 16])
    def test_larger_random_models(self, m):
        q = _random_qubo(np.random.default_rng(m), m)
        emin, _ = qubo_brute(q.linear.tolist(), q.quadratic, 0.0)
        assert sample_exact(q).lowest_energy == pytest.approx(emin, abs=1e-12)


class TestStructured:
    @pytest.mark.parametrize("q", [
        kp_qubo(kp_toy(6, 3)), kp_qubo(kp_toy(9, 9)), tsp_qubo(tsp_toy(3)), tsp_qubo(tsp_toy(4)),
        blop_to_qubo(BlopInstance([1, -2, 3, -1], [[1, 2, 1, 1], [1, 0, 1, 0]], [2, 1], ("<=", "=")), [9.0, 9.0]),
    ], ids=["kp6", "kp9", "tsp3", "tsp4", "blop"])
    def test_agrees_with_enumeration(self, q):
        a, b = sample_exact(q), sample_exact_structured(q)
        assert a.entries == b.entries

    @given(st.integers(1, 10), st.integers(0, 2 ** 31 - 1))
    def test_random_kp(self, n, seed):
        q = kp_qubo(random_kp(np.random.default_rng(seed), n))
        assert sample_exact(q).entries == sample_exact_structured(q).entries

    def test_reaches_full_toy_size(self):
        ss = ExactSampler().sample(kp_qubo(kp_toy(25, 10)))
        assert ss.lowest_energy == -205
        assert ss.first.bits[:25] == (0,) * 15 + (1,) * 10

    def test_tsp_49_bits(self):
        ss = ExactSampler().sample(tsp_qubo(tsp_toy(7)))
        assert ss.lowest_energy == 7 and len(ss) == 7

    def test_needs_structure(self):
        with pytest.raises(BudgetError, match="structure"):
            sample_exact_structured(QuboModel(30, np.ones(30), {}))

    def test_node_limit(self):
        with pytest.raises(BudgetError, match="nodes"):
            sample_exact_structured(kp_qubo(kp_toy(25, 10)), max_nodes=10)

    def test_enumeration_only_sampler_refuses(self):
        with pytest.raises(BudgetError):
            ExactSampler(structured=False).sample(kp_qubo(kp_toy(25, 10)))


class TestAnnealing:
    def test_single_bit(self):
        ss = sample_sa(QuboModel(1, [1.0], {}), SamplerParams(num_reads=1000, sweeps=100, seed=3))
        freq = sum(e.occurrences for e in ss.entries if e.bits == (0,)) / ss.total_reads
        assert freq > 0.99

    def test_deterministic(self):
        q = kp_qubo(kp_toy(8, 5))
        p = SamplerParams(num_reads=50, sweeps=20, seed=11)
        assert sample_sa(q, p) == sample_sa(q, p)
        assert sample_sa(q, p) != sample_sa(q, SamplerParams(num_reads=50, sweeps=20, seed=12))

    def test_sampler_seed_overrides_params(self):
        q = kp_qubo(kp_toy(6, 3))
        s = SimulatedAnnealingSampler(SamplerParams(num_reads=30, sweeps=10))
        assert s.sample(q, 5) == sample_sa(q, SamplerParams(num_reads=30, sweeps=10, seed=5))

    def test_bookkeeping(self):
        q = kp_qubo(kp_toy(10, 4))
        ss = sample_sa(q, SamplerParams(num_reads=200, sweeps=30, seed=1))
        assert ss.total_reads == 200 and ss.sampler_id == "sa" and ss.seed == 1
        _check_bookkeeping(q, ss)

    def test_beats_random_guessing(self):
        q = kp_qubo(kp_toy(8, 8))
        ground = sample_exact(q).lowest_energy

        def ground_freq(ss):
            return sum(e.occurrences for e in ss.entries if e.energy <= ground + 1e-9) / ss.total_reads

        sa = sample_sa(q, SamplerParams(num_reads=1000, sweeps=100, seed=0))
        rnd = sample_uniform(q, 1000, 0)
        assert ground_freq(sa) > ground_freq(rnd)

    def test_more_sweeps_do_not_hurt(self):
        q = kp_qubo(kp_toy(8, 8))
        stats = []
        for sweeps in (10, 100, 1000):
            best = [sample_sa(q, SamplerParams(num_reads=20, sweeps=sweeps, seed=s)).lowest_energy
                    for s in range(20)]
            stats.append((np.mean(best), np.std(best) / math.sqrt(len(best))))
        for (m0, e0), (m1, e1) in zip(stats, stats[1:]):
            assert m1 <= m0 + 3 * math.hypot(e0, e1)

    @pytest.mark.parametrize("kw", [dict(num_reads=0), dict(sweeps=0), dict(beta_initial=0.0),
                                    dict(beta_initial=5.0, beta_final=1.0)])
    def test_bad_params(self, kw):
        with pytest.raises(InputError):
            SamplerParams(**kw)

    def test_empty_model(self):
        with pytest.raises(InputError):
            sample_sa(QuboModel(0, [], {}))


class TestRandomBaseline:
    def test_two_bits_finds_minimum(self):
        q = QuboModel(2, [1.0, -1.0], {(0, 1): 0.5})
        reps = sample_random_baseline(q, 1024, 100, seed=0)
        assert all(r.first.bits == (0, 1) for r in reps)

    def test_single_draw(self):
        reps = sample_random_baseline(QuboModel(3, np.ones(3), {}), 1, 50, seed=2)
        assert all(r.total_reads == 1 and len(r) == 1 for r in reps)
        assert len({r.first.bits for r in reps}) > 1

    def test_constant(self):
        reps = sample_random_baseline(QuboModel(3, np.zeros(3), {}, 2.5), 10, 5, seed=0)
        assert all(r.lowest_energy == 2.5 for r in reps)

    @given(st.integers(1, 8), st.integers(1, 40), st.integers(0, 2 ** 31 - 1))
    @settings(max_examples=30)
    def test_champion_is_argmin_of_its_draws(self, m, draws, seed):
        q = _random_qubo(np.random.default_rng(seed), m)
        for r in sample_random_baseline(q, draws, 3, seed):
            assert r.total_reads == draws
            assert r.first.energy == min(e.energy for e in r.entries)
            _check_bookkeeping(q, r)

    def test_replayable(self):
        q = kp_qubo(kp_toy(5, 2))
        assert sample_random_baseline(q, 20, 4, 9) == sample_random_baseline(q, 20, 4, 9)

    def test_bad_repetitions(self):
        with pytest.raises(InputError):
            sample_random_baseline(QuboModel(1, [1.0], {}), 1, 0, 0)


class TestRandomTours:
    def test_three_cities_split(self):
        tours = sample_random_tour_baseline(tsp_toy(3), 10000, seed=0)
        k = sum(t.order == (0, 1, 2) for t in tours)
        assert abs(k - 5000) < 5 * math.sqrt(10000 * 0.25)

    def test_four_cities_cover_all(self):
        tours = sample_random_tour_baseline(tsp_toy(4), 600, seed=1)
        assert len({t.order for t in tours}) == 6
        assert all(t.order[0] == 0 for t in tours)

    def test_expected_normalized_cost(self):
        from hybridbb.problem import tour_cost

        inst = tsp_toy(3)
        tours = sample_random_tour_baseline(inst, 20000, seed=4)
        mean = np.mean([tour_cost(inst, t) / 3 for t in tours])
        assert mean == pytest.approx(1.5, abs=0.03)


class TestSampleSet:
    def test_csv(self):
        ss = sample_exact(kp_qubo(kp_toy(4, 2)))
        assert ss.to_csv() == "bits,energy,occurrences\n001100,-7.0,1\n"

    def test_dict_round_trip(self):
        ss = sample_sa(kp_qubo(kp_toy(5, 2)), SamplerParams(num_reads=40, sweeps=5, seed=2))
        assert SampleSet.from_dict(ss.to_dict()) == ss

    def test_factory(self):
        assert isinstance(make_sampler("exact"), ExactSampler)
        assert isinstance(make_sampler("sa"), SimulatedAnnealingSampler)
        assert make_sampler("random", SamplerParams(num_reads=7)).num_reads == 7
        with pytest.raises(InputError):
            make_sampler("dwave")

    def test_random_sampler_reads(self):
        ss = RandomSampler(30).sample(kp_qubo(kp_toy(4, 2)), 1)
        assert ss.total_reads == 30
