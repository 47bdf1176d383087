"""Command-line entry point: ``hybridbb <subcommand> ...``.

Exit codes: 0 success, 2 bad input, 3 budget refusal, 4 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys

import numpy as np

from .branch_bound import bb_generic, kp_bb, tsp_bb
from .errors import BudgetError, InputError, NumericalError
from .experiments import EXPERIMENTS, ExperimentConfig, load_config, parse_toy, run_experiment
from .hybrid import HybridConfig, hybrid_kp, hybrid_tsp
from .plotting import KINDS, emit_plot
from .problem import (
    BlopInstance,
    KpInstance,
    TspInstance,
    blop_solution,
    kp_solution,
    load_instance,
    tour_cost,
    tour_from_position_matrix,
    validate_tour,
)
from .qubo import blop_to_qubo, kp_qubo, qubo_to_ising, slack_bits, tsp_qubo
from .samplers import ExactSampler, SamplerParams, make_sampler, sample_sa
from .spectrum import Schedule, gap_scan

EXIT_OK, EXIT_INPUT, EXIT_BUDGET, EXIT_NUMERICAL = 0, 2, 3, 4


def _add_common(p, defaults=True):
    d = (lambda v: v) if defaults else (lambda v: None)
    p.add_argument("--seed", type=int, default=d(0))
    p.add_argument("--runs", type=int, default=d(1))
    p.add_argument("--reads", type=int, default=d(1000))
    p.add_argument("--sweeps", type=int, default=d(1000))
    p.add_argument("--out-dir", default=None)
    p.add_argument("--config", default=None, help="JSON file with default values for the flags")


def _add_instance(p):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--instance", help="instance JSON file")
    g.add_argument("--toy", help="toy family: 'N,W' for a knapsack, 'n' for a TSP")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybridbb", description="Hybrid branch-and-bound with QUBO samplers.")
    sub = parser.add_subparsers(dest="command", required=True)

    for name, methods in (("solve-kp", ("bb", "hybrid", "exact", "sa")),
                          ("solve-tsp", ("bb", "hybrid", "exact", "sa")),
                          ("solve-blop", ("bb", "exact", "sa"))):
        p = sub.add_parser(name)
        _add_instance(p)
        p.add_argument("--method", choices=methods, default="bb")
        p.add_argument("--sampler", choices=("exact", "sa", "random"), default="exact")
        if name == "solve-kp":
            p.add_argument("--max-qubits", type=int, default=None)
        if name == "solve-tsp":
            p.add_argument("--cities-budget", type=int, default=None)
        _add_common(p)

    p = sub.add_parser("experiment")
    p.add_argument("experiment_id", nargs="?", default=None, help=", ".join(EXPERIMENTS))
    _add_instance(p)
    p.add_argument("--sampler", choices=("exact", "sa", "random"), default=None)
    p.add_argument("--budgets", default=None, help="comma separated list, or lo:hi inclusive")
    p.add_argument("--sizes", default=None, help="comma separated list, or lo:hi inclusive")
    p.add_argument("--w-cap", type=int, default=None)
    p.add_argument("--sweeps-list", default=None)
    p.add_argument("--grid-points", type=int, default=None)
    p.add_argument("--schedule", default=None)
    _add_common(p, defaults=False)

    p = sub.add_parser("gap-scan")
    _add_instance(p)
    p.add_argument("--schedule", default=None, help="two or three column schedule table")
    p.add_argument("--grid-points", type=int, default=201)
    p.add_argument("--out-dir", default=None)

    p = sub.add_parser("export-qubo")
    _add_instance(p)
    p.add_argument("--ising", action="store_true", help="write the Ising form instead")
    p.add_argument("--out", required=True)

    p = sub.add_parser("plot")
    p.add_argument("csv")
    p.add_argument("--kind", choices=KINDS, default=None)
    p.add_argument("--out", default=None)
    return parser


def _int_list(text):
    if text is None:
        return None
    text = str(text)
    try:
        if ":" in text:
            lo, hi = (int(t) for t in text.split(":"))
            return list(range(lo, hi + 1))
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected integers like '1,2,3' or '1:5', got {text!r}") from None


def _apply_config(args, parser_defaults: dict):
    """Fill flags the user did not pass from ``--config``; explicit flags win."""
    if not getattr(args, "config", None):
        return args
    doc = load_config(args.config)
    for key, value in doc.items():
        attr = key.replace("-", "_")
        if not hasattr(args, attr):
            raise InputError(f"unknown config field {key!r}")
        if getattr(args, attr) == parser_defaults.get(attr):
            setattr(args, attr, value)
    return args


def _load(args):
    if args.instance:
        return load_instance(args.instance)
    if args.toy:
        return parse_toy(args.toy)
    raise InputError("give an instance with --instance FILE or --toy SPEC")


def _params(args) -> SamplerParams:
    return SamplerParams(num_reads=args.reads, sweeps=args.sweeps, seed=args.seed)


def _write_report(args, name, report):
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        path = os.path.join(args.out_dir, name)
        with open(path, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True, default=_json_default)
            fh.write("\n")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _bits(sol) -> str:
    return "".join(map(str, sol.bits))


def _best_feasible(samples, n_orig, check):
    """First (lowest-energy) read whose leading bits pass ``check``."""
    for e in samples.entries:
        if check(np.array(e.bits[:n_orig])):
            return e
    return None


def cmd_solve_kp(args) -> int:
    inst = _load(args)
    if not isinstance(inst, KpInstance):
        raise InputError(f"solve-kp needs a knapsack instance, got {type(inst).__name__}")
    report = {"method": args.method}
    if args.method == "bb":
        res = kp_bb(inst)
        sol = res.best
        report["stats"] = vars(res.stats)
    elif args.method == "hybrid":
        budget = args.max_qubits or inst.n + slack_bits(inst.capacity)
        tr = hybrid_kp(inst, HybridConfig(budget, make_sampler(args.sampler, _params(args)), 1, args.seed))
        sol = tr.best
        report["trace"] = tr.summary()
    else:
        q = kp_qubo(inst)
        samples = ExactSampler().sample(q) if args.method == "exact" else sample_sa(q, _params(args))
        e = _best_feasible(samples, inst.n, inst.is_feasible)
        if e is None:
            print("no feasible read")
            _write_report(args, "solve_kp.json", {**report, "best": None})
            return EXIT_OK
        sol = kp_solution(inst, e.bits[:inst.n])
        report["lowest_energy"] = samples.lowest_energy
    items = [i + 1 for i, b in enumerate(sol.bits) if b]
    report.update(objective=sol.objective, bits=_bits(sol), items=items)
    print(f"z={sol.objective:g} items={items}")
    _write_report(args, "solve_kp.json", report)
    return EXIT_OK


def cmd_solve_tsp(args) -> int:
    inst = _load(args)
    if not isinstance(inst, TspInstance):
        raise InputError(f"solve-tsp needs a TSP instance, got {type(inst).__name__}")
    report = {"method": args.method}
    if args.method == "bb":
        res = tsp_bb(inst)
        tour, cost = res.tour, res.best.objective
        report["stats"] = vars(res.stats)
    elif args.method == "hybrid":
        m = args.cities_budget or inst.n
        tr = hybrid_tsp(inst, HybridConfig.for_cities(m, sampler=make_sampler(args.sampler, _params(args)),
                                                      runs=1, seed=args.seed))
        report["trace"] = tr.summary()
        if tr.tour is None:
            print("no valid tour found")
            _write_report(args, "solve_tsp.json", report)
            return EXIT_OK
        tour, cost = tr.tour, tr.best.objective
    else:
        q = tsp_qubo(inst)
        samples = ExactSampler().sample(q) if args.method == "exact" else sample_sa(q, _params(args))
        n = inst.n
        e = _best_feasible(samples, n * n,
                           lambda b: validate_tour(inst, b.reshape(n, n), encoding="position"))
        if e is None:
            print("no valid tour found")
            _write_report(args, "solve_tsp.json", {**report, "tour": None})
            return EXIT_OK
        tour = tour_from_position_matrix(np.array(e.bits).reshape(n, n))
        cost = tour_cost(inst, tour)
        report["lowest_energy"] = samples.lowest_energy
    report.update(cost=cost, tour=list(tour.order))
    print(f"cost={cost:g} tour={list(tour.order)}")
    _write_report(args, "solve_tsp.json", report)
    return EXIT_OK


def blop_lambda(inst: BlopInstance) -> float:
    """Penalty weight that outweighs any objective gain: sum |c| + 1 (integer rows)."""
    return float(np.abs(inst.c).sum()) + 1.0


def cmd_solve_blop(args) -> int:
    inst = _load(args)
    if isinstance(inst, KpInstance):
        inst = inst.to_blop()
    if not isinstance(inst, BlopInstance):
        raise InputError(f"solve-blop needs a BLOP or knapsack instance, got {type(inst).__name__}")
    report = {"method": args.method}
    if args.method == "bb":
        res = bb_generic(inst)
        sol = res.best
        report["stats"] = vars(res.stats)
    else:
        q = blop_to_qubo(inst, blop_lambda(inst))
        samples = ExactSampler().sample(q) if args.method == "exact" else sample_sa(q, _params(args))
        e = _best_feasible(samples, inst.n, lambda b: blop_solution(inst, b).feasible)
        sol = None if e is None else blop_solution(inst, e.bits[:inst.n])
    if sol is None:
        print("infeasible")
        _write_report(args, "solve_blop.json", {**report, "best": None})
        return EXIT_OK
    report.update(objective=sol.objective, bits=_bits(sol))
    print(f"z={sol.objective:g} x={_bits(sol)}")
    _write_report(args, "solve_blop.json", report)
    return EXIT_OK


def cmd_experiment(args) -> int:
    doc = load_config(args.config) if args.config else {}
    overrides = {
        "experiment": args.experiment_id,
        "instance": args.instance,
        "toy": args.toy,
        "sampler": args.sampler,
        "reads": args.reads,
        "sweeps": args.sweeps,
        "budgets": _int_list(args.budgets),
        "sizes": _int_list(args.sizes),
        "w_cap": args.w_cap,
        "sweeps_list": _int_list(args.sweeps_list),
        "grid_points": args.grid_points,
        "schedule": args.schedule,
        "runs": args.runs,
        "seed": args.seed,
        "out_dir": args.out_dir,
    }
    doc.update({k: v for k, v in overrides.items() if v is not None})
    cfg = ExperimentConfig.from_dict(doc)
    for path in run_experiment(cfg):
        print(path)
    return EXIT_OK


def cmd_gap_scan(args) -> int:
    inst = _load(args)
    if isinstance(inst, KpInstance):
        q = kp_qubo(inst)
    elif isinstance(inst, TspInstance):
        q = tsp_qubo(inst)
    else:
        raise InputError("gap-scan needs a knapsack or TSP instance")
    sched = Schedule.from_file(args.schedule) if args.schedule else Schedule.linear()
    scan = gap_scan(qubo_to_ising(q), sched, args.grid_points)
    if not math.isfinite(scan.min_gap):
        raise NumericalError("gap scan produced a non-finite gap")
    print(f"min_gap={scan.min_gap!r} at s={scan.argmin_s!r} (dim {scan.matrix_dim})")
    if args.out_dir:
        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "gap_scan.csv"), "w") as fh:
            fh.write(scan.to_csv())
    return EXIT_OK


def cmd_export_qubo(args) -> int:
    inst = _load(args)
    if isinstance(inst, KpInstance):
        q = kp_qubo(inst)
    elif isinstance(inst, TspInstance):
        q = tsp_qubo(inst)
    else:
        q = blop_to_qubo(inst, blop_lambda(inst))
    doc = qubo_to_ising(q).to_dict() if args.ising else q.to_dict()
    with open(args.out, "w") as fh:
        json.dump(doc, fh, indent=2)
        fh.write("\n")
    print(f"{doc['type']} with {q.num_bits} variables -> {args.out}")
    return EXIT_OK


def cmd_plot(args) -> int:
    print(emit_plot(args.csv, args.kind, args.out))
    return EXIT_OK


COMMANDS = {
    "solve-kp": cmd_solve_kp,
    "solve-tsp": cmd_solve_tsp,
    "solve-blop": cmd_solve_blop,
    "experiment": cmd_experiment,
    "gap-scan": cmd_gap_scan,
    "export-qubo": cmd_export_qubo,
    "plot": cmd_plot,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command != "experiment" and getattr(args, "config", None):
            sub = parser._subparsers._group_actions[0].choices[args.command]
            defaults = {a.dest: a.default for a in sub._actions}
            _apply_config(args, defaults)
        if args.command == "experiment" and args.experiment_id is None and not args.config:
            raise InputError("experiment needs an id or a --config file")
        return COMMANDS[args.command](args)
    except BudgetError as exc:
        print(f"budget refused: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except InputError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
