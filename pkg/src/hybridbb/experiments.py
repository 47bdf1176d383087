"""Experiment drivers that turn solver runs into CSV tables.

Every experiment is a pure function of its :class:`ExperimentConfig`:
all randomness flows from ``cfg.seed``, rows are written in a fixed order
and floats are written with ``repr``, so reruns produce identical bytes.
"""

from __future__ import annotations

import csv
import json
import math
import os
from dataclasses import asdict, dataclass, fields, replace
from typing import Callable

import numpy as np

from .branch_bound import kp_bb, tsp_bb
from .errors import InputError
from .hybrid import (
    CALL_COUNT_COLUMNS,
    HybridConfig,
    call_count_study,
    call_seed,
    hybrid_kp,
    hybrid_tsp,
    run_repeated,
)
from .metrics import MetricReport, aggregate, c_tilde, delta_v, hamming, p0_estimate, w_tilde
from .problem import KpInstance, TspInstance, kp_toy, load_instance, tour_cost, tsp_toy
from .qubo import QuboModel, kp_qubo, slack_bits, tsp_qubo
from .samplers import (
    ExactSampler,
    RandomSampler,
    SamplerParams,
    make_sampler,
    sample_random_tour_baseline,
    sample_sa,
    sample_uniform,
)
from .spectrum import Schedule, fit_power_law, gap_scan, kp_toy_family

EXPERIMENTS = ("calls-vs-budget", "kp-metrics-vs-M", "kp-metrics-vs-N",
               "tsp-metrics-vs-M", "sweeps-study", "gap-scaling")

DEFAULT_SWEEPS_LIST = (1, 2, 5, 10, 20, 50, 100, 200, 500, 1000)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: str
    instance: str | None = None
    toy: str | None = None
    sampler: str | None = None
    reads: int = 1000
    sweeps: int = 100
    beta_initial: float = 0.1
    beta_final: float = 10.0
    budgets: tuple[int, ...] | None = None
    sizes: tuple[int, ...] | None = None
    w_cap: int | None = None
    sweeps_list: tuple[int, ...] | None = None
    grid_points: int = 201
    schedule: str | None = None
    runs: int = 20
    seed: int = 0
    out_dir: str = "results"

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise InputError(f"unknown experiment {self.experiment!r}; expected one of {', '.join(EXPERIMENTS)}")
        for name in ("budgets", "sizes", "sweeps_list"):
            v = getattr(self, name)
            if v is not None:
                object.__setattr__(self, name, tuple(int(x) for x in v))
        if self.runs < 1:
            raise InputError(f"runs must be >= 1, got {self.runs}")

    def sampler_params(self, seed: int | None = None) -> SamplerParams:
        return SamplerParams(self.reads, self.sweeps, self.beta_initial, self.beta_final,
                             self.seed if seed is None else seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        for name in ("budgets", "sizes", "sweeps_list"):
            if d[name] is not None:
                d[name] = list(d[name])
        return d

    @classmethod
    def from_dict(cls, doc: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(doc) - known)
        if unknown:
            raise InputError(f"unknown config field {unknown[0]!r}")
        if "experiment" not in doc:
            raise InputError("config is missing field 'experiment'")
        return cls(**doc)


def load_config(path) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc.msg} at line {exc.lineno}") from None
    if not isinstance(doc, dict):
        raise InputError(f"config {path} must hold a JSON object")
    return doc


def parse_toy(text: str) -> KpInstance | TspInstance:
    """``"N,W"`` is a knapsack toy, a single ``"n"`` is a TSP toy."""
    try:
        parts = [int(p) for p in str(text).split(",")]
    except ValueError:
        raise InputError(f"toy spec must be 'N,W' or 'n', got {text!r}") from None
    if len(parts) == 2:
        return kp_toy(*parts)
    if len(parts) == 1:
        return tsp_toy(parts[0])
    raise InputError(f"toy spec must be 'N,W' or 'n', got {text!r}")


def _instance(cfg: ExperimentConfig, default: str):
    if cfg.instance is not None:
        return load_instance(cfg.instance)
    return parse_toy(cfg.toy or default)


def _expect(inst, kind, experiment):
    if not isinstance(inst, kind):
        raise InputError(f"{experiment} needs a {kind.__name__}, got {type(inst).__name__}")
    return inst


# --------------------------------------------------------------------------
# CSV helpers


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (float, np.floating)):
        return "" if math.isnan(v) else repr(float(v))
    return str(v)


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(v) for v in row])


def _stat_columns(names, prefix=""):
    cols = []
    for n in names:
        cols += [f"{prefix}{n}_mean", f"{prefix}{n}_var"]
    return cols


def _stat_values(report: MetricReport, names):
    summary = report.summary()
    out = []
    for n in names:
        out += list(summary.get(n, (math.nan, math.nan)))
    return out


# --------------------------------------------------------------------------
# per-run metrics


class GroundEnergies:
    """Exact ground energy per QUBO, memoised on the model's coefficients."""

    def __init__(self):
        self._cache: dict = {}
        self._sampler = ExactSampler()

    def __call__(self, q: QuboModel) -> float:
        key = (q.num_bits, q.linear.tobytes(), q.pair_arrays()[2].tobytes(),
               q.pair_arrays()[0].tobytes(), q.pair_arrays()[1].tobytes(), q.offset)
        if key not in self._cache:
            self._cache[key] = self._sampler.sample(q).lowest_energy
        return self._cache[key]


def _mean_p0(trace, ground: GroundEnergies) -> float | None:
    if not trace.per_call_log:
        return None
    return float(np.mean([p0_estimate(c.samples, ground(c.model)) for c in trace.per_call_log]))


def kp_metric_report(inst: KpInstance, traces, ground: GroundEnergies | None = None) -> MetricReport:
    """Metrics of the final (feasible) answer of each run against the KP optimum."""
    ground = ground or GroundEnergies()
    opt = kp_bb(inst)
    x_opt = np.array(opt.best.bits)
    dv, wt, hm, p0 = [], [], [], []
    for tr in traces:
        x = np.array(tr.best.bits)
        dv.append(delta_v(tr.best.objective, opt.best.objective))
        wt.append(w_tilde(inst.weight(x), inst.capacity))
        hm.append(hamming(x, x_opt))
        p = _mean_p0(tr, ground)
        if p is not None:
            p0.append(p)
    return MetricReport(delta_v=tuple(dv), w_tilde=tuple(wt), hamming=tuple(hm), p0=tuple(p0))


def tsp_metric_report(inst: TspInstance, traces, ground: GroundEnergies | None = None) -> tuple[MetricReport, int]:
    """Metrics over runs that found a tour, plus the number of runs that did not."""
    ground = ground or GroundEnergies()
    opt = tsp_bb(inst)
    opt_bits = opt.tour.position_matrix().ravel()
    ct, hm, p0 = [], [], []
    failures = 0
    for tr in traces:
        p = _mean_p0(tr, ground)
        if p is not None:
            p0.append(p)
        if tr.tour is None:
            failures += 1
            continue
        ct.append(c_tilde(tr.best.objective, opt.best.objective))
        hm.append(hamming(tr.tour.position_matrix().ravel(), opt_bits))
    return MetricReport(c_tilde=tuple(ct), hamming=tuple(hm), p0=tuple(p0)), failures


def random_tour_report(inst: TspInstance, runs: int, seed: int) -> MetricReport:
    opt = tsp_bb(inst)
    opt_bits = opt.tour.position_matrix().ravel()
    tours = sample_random_tour_baseline(inst, runs, seed)
    return MetricReport(
        c_tilde=tuple(c_tilde(tour_cost(inst, t), opt.best.objective) for t in tours),
        hamming=tuple(hamming(t.position_matrix().ravel(), opt_bits) for t in tours),
    )


# --------------------------------------------------------------------------
# experiments

KP_METRICS = ("delta_v", "abs_delta_v", "w_tilde", "hamming", "p0")
TSP_METRICS = ("c_tilde", "hamming", "p0")
TSP_BASELINE_METRICS = ("c_tilde", "hamming")


def _kp_budget_rows(inst: KpInstance, budgets, cfg: ExperimentConfig, ground):
    sampler = make_sampler(cfg.sampler or "sa", cfg.sampler_params())
    baseline = RandomSampler(cfg.reads)
    for b in budgets:
        hc = HybridConfig(int(b), sampler, cfg.runs, cfg.seed)
        rep = kp_metric_report(inst, run_repeated(hybrid_kp, inst, hc), ground)
        base = kp_metric_report(inst, run_repeated(hybrid_kp, inst, replace(hc, sampler=baseline)), ground)
        yield rep, base


def kp_metrics_vs_budget(cfg: ExperimentConfig):
    inst = _expect(_instance(cfg, "12,6"), KpInstance, cfg.experiment)
    k = slack_bits(inst.capacity)
    budgets = cfg.budgets or tuple(range(k + 1, inst.n + k + 1))
    header = ["M", *_stat_columns(KP_METRICS), *_stat_columns(KP_METRICS, "baseline_")]
    ground = GroundEnergies()
    rows = []
    for b, (rep, base) in zip(budgets, _kp_budget_rows(inst, budgets, cfg, ground)):
        rows.append([b, *_stat_values(rep, KP_METRICS), *_stat_values(base, KP_METRICS)])
    return {"kp_metrics_vs_M.csv": (header, rows)}


def kp_metrics_vs_size(cfg: ExperimentConfig):
    """Whole-problem budget (a single sampler call) for kp_toy(N, W) over N."""
    w_cap = cfg.w_cap or 4
    sizes = cfg.sizes or tuple(range(w_cap, 13))
    header = ["N", "M", *_stat_columns(KP_METRICS), *_stat_columns(KP_METRICS, "baseline_")]
    ground = GroundEnergies()
    rows = []
    for n in sizes:
        inst = kp_toy(int(n), w_cap)
        m = n + slack_bits(w_cap)
        rep, base = next(_kp_budget_rows(inst, (m,), cfg, ground))
        rows.append([n, m, *_stat_values(rep, KP_METRICS), *_stat_values(base, KP_METRICS)])
    return {"kp_metrics_vs_N.csv": (header, rows)}


def tsp_metrics_vs_budget(cfg: ExperimentConfig):
    inst = _expect(_instance(cfg, "6"), TspInstance, cfg.experiment)
    budgets = cfg.budgets or tuple(range(3, inst.n + 1))
    sampler = make_sampler(cfg.sampler or "sa", cfg.sampler_params())
    ground = GroundEnergies()
    base = random_tour_report(inst, cfg.runs, cfg.seed)
    header = ["M", *_stat_columns(TSP_METRICS), "failures", *_stat_columns(TSP_BASELINE_METRICS, "baseline_")]
    rows = []
    for b in budgets:
        hc = HybridConfig.for_cities(int(b), sampler=sampler, runs=cfg.runs, seed=cfg.seed)
        rep, failures = tsp_metric_report(inst, run_repeated(hybrid_tsp, inst, hc), ground)
        rows.append([b, *_stat_values(rep, TSP_METRICS), failures, *_stat_values(base, TSP_BASELINE_METRICS)])
    return {"tsp_metrics_vs_M.csv": (header, rows)}


def calls_vs_budget(cfg: ExperimentConfig):
    inst = _instance(cfg, "25,10")
    if cfg.budgets:
        budgets = cfg.budgets
    elif isinstance(inst, KpInstance):
        # the last 16 budgets, ending with the one that holds the whole problem
        full = inst.n + slack_bits(inst.capacity)
        budgets = tuple(range(max(slack_bits(inst.capacity) + 1, full - 15), full + 1))
    else:
        budgets = tuple(range(3, inst.n + 1))
    sampler = make_sampler(cfg.sampler or "exact", cfg.sampler_params())
    rows = call_count_study(inst, budgets, sampler, cfg.seed)
    body = [[r.budget, r.classical_calls, r.quantum_calls, r.best_objective, r.classical_baseline] for r in rows]
    return {"calls_vs_budget.csv": (list(CALL_COUNT_COLUMNS), body)}


def sweeps_study(cfg: ExperimentConfig):
    """Ground-state frequency and best energy of SA on the whole-problem QUBO versus sweeps."""
    inst = _instance(cfg, "12,6")
    q = kp_qubo(inst) if isinstance(inst, KpInstance) else tsp_qubo(inst)
    e0 = ExactSampler().sample(q).lowest_energy
    sweeps_list = cfg.sweeps_list or DEFAULT_SWEEPS_LIST
    base = [sample_uniform(q, cfg.reads, call_seed(cfg.seed, r)) for r in range(cfg.runs)]
    base_p0 = aggregate(p0_estimate(s, e0) for s in base)
    base_e = aggregate(s.lowest_energy for s in base)
    header = ["sweeps", "p0_mean", "p0_var", "min_energy_mean", "min_energy_var",
              "baseline_p0_mean", "baseline_p0_var", "baseline_min_energy_mean", "baseline_min_energy_var"]
    rows = []
    for sw in sweeps_list:
        sets = [sample_sa(q, replace(cfg.sampler_params(call_seed(cfg.seed, r)), sweeps=int(sw)))
                for r in range(cfg.runs)]
        rows.append([sw, *aggregate(p0_estimate(s, e0) for s in sets),
                     *aggregate(s.lowest_energy for s in sets), *base_p0, *base_e])
    return {"sweeps_study.csv": (header, rows)}


def gap_scaling(cfg: ExperimentConfig):
    w_cap = cfg.w_cap or 3
    k = slack_bits(w_cap)
    sizes = cfg.sizes or tuple(range(w_cap + k, w_cap + k + 5))
    sched = Schedule.from_file(cfg.schedule) if cfg.schedule else Schedule.linear()
    family = kp_toy_family(w_cap)
    rows, gaps = [], []
    for m in sizes:
        scan = gap_scan(family(int(m)), sched, cfg.grid_points)
        rows.append([m, scan.min_gap, scan.argmin_s])
        gaps.append(scan.min_gap)
    fit = fit_power_law(sizes, gaps)
    return {"gap_scaling.csv": (["M", "min_gap", "argmin_s"], rows),
            "gap_scaling_fit.json": fit.to_dict()}


RUNNERS: dict[str, Callable[[ExperimentConfig], dict]] = {
    "calls-vs-budget": calls_vs_budget,
    "kp-metrics-vs-M": kp_metrics_vs_budget,
    "kp-metrics-vs-N": kp_metrics_vs_size,
    "tsp-metrics-vs-M": tsp_metrics_vs_budget,
    "sweeps-study": sweeps_study,
    "gap-scaling": gap_scaling,
}


def run_experiment(cfg: ExperimentConfig) -> list[str]:
    """Run ``cfg.experiment`` and write its outputs into ``cfg.out_dir``; returns the paths."""
    outputs = RUNNERS[cfg.experiment](cfg)
    os.makedirs(cfg.out_dir, exist_ok=True)
    paths = []
    for name, payload in outputs.items():
        path = os.path.join(cfg.out_dir, name)
        if name.endswith(".csv"):
            write_csv(path, *payload)
        else:
            with open(path, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
        paths.append(path)
    return paths
