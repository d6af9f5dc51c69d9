"""Command-line front end: solve, verify, export-lp, gen-x3c, bench."""

from __future__ import annotations

import argparse
import json
import sys
import time
from fractions import Fraction

from . import milp, polycases, reduction, solver_bb, verify as verify_mod
from .model import (InstanceError, cost_to_json, load_instance, load_solution,
                    save_instance, save_solution, validate_instance)

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_LIMIT = 3


def _load_validated(path, allow_multi_arcs=False):
    try:
        inst = load_instance(path)
    except (InstanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return None
    report = validate_instance(inst, allow_multi_arcs=allow_multi_arcs)
    if not report.ok:
        for issue in report.errors:
            print(f"error: {issue.code}: {issue.message} ({issue.location})",
                  file=sys.stderr)
        return None
    return inst


def _limits(args):
    return solver_bb.SolveLimits(
        time_limit=args.time_limit,
        node_limit=args.node_limit,
    )


def _solve_with_mode(inst, mode, limits):
    """Returns (status, solution or None, stats dict). Raises UnsupportedInstance
    for an explicit mode that does not fit the instance."""
    if mode in ("arborescence", "sp"):
        solver = (polycases.solve_arborescence if mode == "arborescence"
                  else polycases.solve_series_parallel)
        sol = solver(inst)
        return ("optimal", sol, {}) if sol is not None else ("infeasible", None, {})
    if mode == "auto":
        for solver in (polycases.solve_arborescence, polycases.solve_series_parallel):
            try:
                sol = solver(inst)
            except polycases.UnsupportedInstance:
                continue
            return ("optimal", sol, {}) if sol is not None else ("infeasible", None, {})
    system = milp.build(inst)
    result = solver_bb.solve(system, limits)
    if result.status == "optimal":
        return "optimal", solver_bb.extract_solution(inst, result), result.stats
    return result.status, None, result.stats


def cmd_solve(args):
    inst = _load_validated(args.instance)
    if inst is None:
        return EXIT_INPUT
    try:
        status, sol, stats = _solve_with_mode(inst, args.mode, _limits(args))
    except polycases.UnsupportedInstance as exc:
        print(f"error: mode {args.mode}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if status == "optimal":
        print(f"status: optimal")
        print(f"objective: {cost_to_json(sol.objective_value)}")
        print(f"expansion_cost_total: {cost_to_json(sol.expansion_cost_total)}")
        print(f"penalty_total: {cost_to_json(sol.penalty_total)}")
        if stats:
            print(f"nodes: {stats.get('nodes')}")
        if args.output:
            save_solution(sol, args.output)
        return EXIT_OK
    if status == "infeasible":
        print("status: infeasible")
        return EXIT_INFEASIBLE
    print("status: limit_reached")
    return EXIT_LIMIT


def cmd_verify(args):
    inst = _load_validated(args.instance)
    if inst is None:
        return EXIT_INPUT
    try:
        sol = load_solution(args.solution)
    except (InstanceError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    violations = verify_mod.verify(inst, sol)
    for v in violations:
        print(f"{v.family}\t{v.detail}")
    return EXIT_OK if not violations else EXIT_INPUT


def cmd_export_lp(args):
    inst = _load_validated(args.instance)
    if inst is None:
        return EXIT_INPUT
    text = milp.export_lp(milp.build(inst))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_gen_x3c(args):
    x3c = reduction.gen_random_x3c(args.q, args.subsets, args.seed, planted=args.planted)
    inst, threshold = reduction.x3c_to_instance(
        x3c, unit_capacity_encoding=args.unit_capacity)
    save_instance(inst, args.output)
    sidecar = {
        "ground_set": list(x3c.ground_set),
        "subsets": [sorted(s) for s in x3c.subsets],
        "threshold": cost_to_json(threshold),
    }
    if len(x3c.subsets) <= 20:
        sidecar["has_cover"] = reduction.x3c_brute_force(x3c)
    sidecar_path = args.output + ".x3c.json"
    with open(sidecar_path, "w") as fh:
        json.dump(sidecar, fh, indent=2)
        fh.write("\n")
    print(f"wrote {args.output} and {sidecar_path}")
    return EXIT_OK


def bench_record(label, inst, repetitions, mode="milp", limits=None):
    """Dimensions plus mean runtime over the given number of repetitions."""
    from .model import effective_scenarios

    system = milp.build(inst)
    times = []
    objective = None
    status = None
    for _ in range(repetitions):
        t0 = time.perf_counter()
        status, sol, _stats = _solve_with_mode(inst, mode, limits or solver_bb.SolveLimits())
        times.append(time.perf_counter() - t0)
        objective = sol.objective_value if sol is not None else None
    return {
        "label": label,
        "timesteps": inst.horizon + 1,
        "trains": len(inst.trains),
        "nodes": len(inst.network.nodes),
        "arcs": len(inst.network.arcs),
        "scenarios": "/".join(str(len(s.train_ids)) for s in effective_scenarios(inst)),
        "runtime_s": sum(times) / len(times),
        "constraints": len(system.rows),
        "variables": len(system.variables),
        "status": status,
        "objective": cost_to_json(objective) if objective is not None else "",
    }


BENCH_COLUMNS = ["label", "timesteps", "trains", "nodes", "arcs", "scenarios",
                 "runtime_s", "constraints", "variables", "status", "objective"]


def format_bench_table(records):
    rows = [BENCH_COLUMNS] + [
        [f"{r[c]:.4f}" if c == "runtime_s" else str(r[c]) for c in BENCH_COLUMNS]
        for r in records
    ]
    widths = [max(len(row[i]) for row in rows) for i in range(len(BENCH_COLUMNS))]
    lines = ["  ".join(cell.ljust(w) for cell, w in zip(row, widths)).rstrip()
             for row in rows]
    return "\n".join(lines)


def cmd_bench(args):
    records = []
    for path in args.instances:
        inst = _load_validated(path)
        if inst is None:
            print(f"skipping {path}", file=sys.stderr)
            continue
        try:
            records.append(bench_record(path, inst, args.repetitions, args.mode,
                                        _limits(args)))
        except polycases.UnsupportedInstance as exc:
            print(f"skipping {path}: {exc}", file=sys.stderr)
    print(format_bench_table(records))
    if args.output:
        with open(args.output, "w") as fh:
            fh.write("\t".join(BENCH_COLUMNS) + "\n")
            for r in records:
                fh.write("\t".join(str(r[c]) for c in BENCH_COLUMNS) + "\n")
    return EXIT_OK


def build_parser():
    p = argparse.ArgumentParser(prog="raildesign",
                                description="Exact railway network design under "
                                            "timetable constraints")
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp):
        sp.add_argument("--mode", choices=["auto", "milp", "arborescence", "sp"],
                        default="auto")
        sp.add_argument("--time-limit", type=float, default=None)
        sp.add_argument("--node-limit", type=int, default=None)
        sp.add_argument("--threads", type=int, default=1,
                        help="reserved; only single-threaded search is implemented")

    sp = sub.add_parser("solve", help="solve an instance file")
    sp.add_argument("instance")
    add_common(sp)
    sp.add_argument("-o", "--output", default=None, help="solution file to write")
    sp.set_defaults(func=cmd_solve)

    sp = sub.add_parser("verify", help="check a solution against an instance")
    sp.add_argument("instance")
    sp.add_argument("solution")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("export-lp", help="write the LP text model")
    sp.add_argument("instance")
    sp.add_argument("-o", "--output", default=None)
    sp.set_defaults(func=cmd_export_lp)

    sp = sub.add_parser("gen-x3c", help="generate an exact-cover test instance")
    sp.add_argument("--q", type=int, required=True)
    sp.add_argument("--subsets", type=int, required=True)
    sp.add_argument("--seed", type=int, required=True)
    sp.add_argument("--planted", action="store_true")
    sp.add_argument("--unit-capacity", action="store_true",
                    help="encode unit lines as capacity 1 instead of expandable")
    sp.add_argument("-o", "--output", required=True)
    sp.set_defaults(func=cmd_gen_x3c)

    sp = sub.add_parser("bench", help="dimension/runtime table for instance files")
    sp.add_argument("instances", nargs="+")
    add_common(sp)
    sp.add_argument("-R", "--repetitions", type=int, default=4)
    sp.add_argument("-o", "--output", default=None, help="TSV file to write")
    sp.set_defaults(func=cmd_bench)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    if getattr(args, "threads", 1) not in (None, 1):
        print("note: --threads > 1 is not implemented; running single-threaded",
              file=sys.stderr)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
