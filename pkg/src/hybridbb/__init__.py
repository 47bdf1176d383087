"""Hybrid classical/annealing branch-and-bound for binary linear problems."""

from .branch_bound import BbResult, SearchStats, bb_generic, kp_bb, kp_bb_branch_count, tsp_bb
from .errors import BudgetError, InputError, NumericalError
from .hybrid import HybridConfig, HybridTrace, call_count_study, hybrid_kp, hybrid_tsp, run_repeated
from .metrics import MetricReport, aggregate, c_tilde, delta_v, hamming, p0_estimate, w_tilde
from .problem import (
    BitSolution,
    BlopInstance,
    KpInstance,
    Tour,
    TspInstance,
    kp_toy,
    load_instance,
    save_instance,
    tour_cost,
    tsp_toy,
)
from .qubo import IsingModel, QuboModel, blop_to_qubo, kp_qubo, qubo_to_ising, tsp_qubo
from .samplers import (
    ExactSampler,
    RandomSampler,
    SampleSet,
    SamplerParams,
    SimulatedAnnealingSampler,
    sample_exact,
    sample_sa,
)
from .spectrum import Schedule, adiabatic_bound, build_annealing_hamiltonian, gap_scan, gap_scaling_study

__all__ = [
    "BbResult", "BitSolution", "BlopInstance", "BudgetError", "ExactSampler", "HybridConfig",
    "HybridTrace", "InputError", "IsingModel", "KpInstance", "MetricReport", "NumericalError",
    "QuboModel", "RandomSampler", "SampleSet", "SamplerParams", "Schedule", "SearchStats",
    "SimulatedAnnealingSampler", "Tour", "TspInstance", "adiabatic_bound", "aggregate",
    "bb_generic", "blop_to_qubo", "build_annealing_hamiltonian", "c_tilde", "call_count_study",
    "delta_v", "gap_scaling_study", "gap_scan", "hamming", "hybrid_kp", "hybrid_tsp", "kp_bb",
    "kp_bb_branch_count", "kp_qubo", "kp_toy", "load_instance", "p0_estimate", "qubo_to_ising",
    "run_repeated", "sample_exact", "sample_sa", "save_instance", "tour_cost", "tsp_bb",
    "tsp_qubo", "tsp_toy", "w_tilde",
]
