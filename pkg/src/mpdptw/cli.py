"""Command-line front end: generate / solve / validate / oracle / bench.

Exit codes: 0 success (and feasible where that matters), 1 I/O or parse
failure, 2 usage or limit error, 3 no feasible solution, 4 validation
failed.  All subcommands are deterministic under fixed seeds; machine
output is line-delimited JSON without wall-clock times.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from pathlib import Path

from . import kernels
from .ga import GaParams, GaResult, run_ga
from .instance_io import (
    FormatError,
    GeneratorParams,
    generate_random,
    parse_li_lim,
    parse_native,
    parse_solution,
    write_native,
    write_solution,
)
from .model import FeasibilityMode, InputError, Instance, check_feasibility
from .oracle import OracleLimitError, OracleLimits, enumerate_optimal

EXIT_OK = 0
EXIT_IO = 1
EXIT_USAGE = 2
EXIT_NO_FEASIBLE = 3
EXIT_INVALID = 4


def _fallback_seed() -> int:
    env = os.environ.get("PDPTW_SEED")
    if env is None:
        return 0
    try:
        return int(env)
    except ValueError:
        raise InputError(f"PDPTW_SEED must be an integer, got {env!r}")


def _mode(value: str) -> FeasibilityMode:
    return FeasibilityMode.STRICT_PAIRING if value == "strict" else FeasibilityMode.PAPER_LITERAL


def _int_list(text: str) -> list[int]:
    try:
        return [int(part) for part in text.split(",") if part != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")


def _load_instance(path: str) -> Instance:
    text = Path(path).read_text(encoding="utf-8")
    if path.endswith(".txt"):
        return parse_li_lim(text)
    return parse_native(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mpdptw",
        description="Multi-vehicle pickup-and-delivery with time windows.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p):
        p.add_argument("--format", choices=("text", "machine"), default="text")
        p.add_argument("--seed", type=int, default=None, help="defaults to $PDPTW_SEED or 0")

    gen = sub.add_parser("generate", help="write a random instance")
    add_common(gen)
    gen.add_argument("--n", type=int, required=True, help="number of non-depot nodes (even)")
    gen.add_argument("--k", type=int, required=True, help="fleet size")
    gen.add_argument("--area", type=float, default=100.0)
    gen.add_argument("--capacity", type=float, default=60.0)
    gen.add_argument("--horizon", type=float, default=None, help="depot close; default fits the seeded routes")
    gen.add_argument("-o", "--out", required=True)

    solve = sub.add_parser("solve", help="run the genetic solver")
    add_common(solve)
    solve.add_argument("instance")
    solve.add_argument("--pop", type=int, default=100)
    solve.add_argument("--gens", type=int, default=50)
    solve.add_argument("--xover", type=float, default=0.9)
    solve.add_argument("--mut", type=float, default=0.5)
    solve.add_argument("--elitism", type=int, default=1)
    solve.add_argument("--penalty", type=float, default=None)
    solve.add_argument("--mode", choices=("paper", "strict"), default="paper")
    solve.add_argument("--workers", type=int, default=None)
    solve.add_argument("-o", "--out", default=None)

    val = sub.add_parser("validate", help="check a solution report against an instance")
    add_common(val)
    val.add_argument("instance")
    val.add_argument("solution")
    val.add_argument("--mode", choices=("paper", "strict"), default="paper")

    orc = sub.add_parser("oracle", help="exhaustive optimum for small instances")
    add_common(orc)
    orc.add_argument("instance")
    orc.add_argument("--mode", choices=("paper", "strict"), default="paper")
    orc.add_argument("--max-nodes", type=int, default=8)
    orc.add_argument("--max-vehicles", type=int, default=None)
    orc.add_argument("--time-budget", type=float, default=None)

    bench = sub.add_parser("bench", help="seeded sweep over instance and population sizes")
    add_common(bench)
    bench.add_argument("--n", type=_int_list, default=[20])
    bench.add_argument("--k", type=_int_list, default=[2])
    bench.add_argument("--pop", type=_int_list, default=[100, 500])
    bench.add_argument("--instances", type=int, default=1)
    bench.add_argument("--seeds", type=int, default=3)
    bench.add_argument("--gens", type=int, default=10)
    bench.add_argument("--mode", choices=("paper", "strict"), default="paper")
    bench.add_argument("--workers", type=int, default=None)
    bench.add_argument("-o", "--out", default=None)

    return parser


def _ga_params(args, seed: int) -> GaParams:
    params = GaParams(
        population_size=args.pop,
        generations=args.gens,
        crossover_rate=args.xover,
        mutation_rate=args.mut,
        elitism=args.elitism,
        seed=seed,
        mode=_mode(args.mode),
        infeasibility_penalty=args.penalty,
    )
    params.validate()
    return params


def _solve_summary(result: GaResult) -> dict:
    return {
        "best_fitness": result.best_fitness,
        "best_distance": result.best_distance,
        "evaluations": result.evaluations,
        "feasible": result.feasible,
        "generations": len(result.history),
        "mode": result.mode.value,
    }


def cmd_generate(args) -> int:
    seed = args.seed if args.seed is not None else _fallback_seed()
    try:
        params = GeneratorParams(
            n_prime=args.n,
            k=args.k,
            area=args.area,
            capacity=args.capacity,
            horizon=args.horizon,
            seed=seed,
        )
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    instance = generate_random(params)
    try:
        Path(args.out).write_text(write_native(instance), encoding="utf-8")
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    summary = {
        "n_prime": instance.n_prime,
        "k": len(instance.fleet),
        "requests": len(instance.requests),
        "path": args.out,
    }
    if args.format == "machine":
        print(json.dumps(summary, sort_keys=True))
    else:
        print(
            f"wrote {args.out}: N'={summary['n_prime']}, K={summary['k']}, "
            f"{summary['requests']} requests"
        )
    return EXIT_OK


def cmd_solve(args) -> int:
    seed = args.seed if args.seed is not None else _fallback_seed()
    try:
        instance = _load_instance(args.instance)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        params = _ga_params(args, seed)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    kernels.set_workers(args.workers)
    started = time.perf_counter()
    result = run_ga(instance, params)
    elapsed = time.perf_counter() - started
    if args.out:
        try:
            Path(args.out).write_text(
                write_solution(result.best_solution, instance, params.mode),
                encoding="utf-8",
            )
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    if args.format == "machine":
        print(json.dumps(_solve_summary(result), sort_keys=True))
    else:
        print(f"engine: {kernels.engine_name()}")
        print(f"best fitness: {result.best_fitness}")
        print(f"best distance: {result.best_distance}")
        print(f"evaluations: {result.evaluations}")
        print(f"feasible: {result.feasible}")
        print(f"wall time: {elapsed:.3f}s")
    return EXIT_OK if result.feasible else EXIT_NO_FEASIBLE


def cmd_validate(args) -> int:
    try:
        instance = _load_instance(args.instance)
        solution = parse_solution(Path(args.solution).read_text(encoding="utf-8"))
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    report = check_feasibility(solution, instance, _mode(args.mode))
    if args.format == "machine":
        print(
            json.dumps(
                {
                    "feasible": report.feasible,
                    "violations": [
                        {"tag": v.tag, "where": list(v.where), "magnitude": v.magnitude}
                        for v in report.violations
                    ],
                },
                sort_keys=True,
            )
        )
    else:
        print(f"feasible: {report.feasible}")
        for v in report.violations:
            print(f"  {v.tag} at {v.where}: {v.magnitude}")
    return EXIT_OK if report.feasible else EXIT_INVALID


def cmd_oracle(args) -> int:
    try:
        instance = _load_instance(args.instance)
    except (FormatError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    try:
        limits = OracleLimits(
            max_nodes=args.max_nodes,
            max_vehicles=args.max_vehicles,
            time_budget=args.time_budget,
        )
        result = enumerate_optimal(instance, _mode(args.mode), limits)
    except (InputError, OracleLimitError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.format == "machine":
        print(
            json.dumps(
                {
                    "optimal_fitness": result.optimal_fitness,
                    "routes": None
                    if result.optimum is None
                    else [
                        {"vehicle": r.vehicle, "visits": list(r.visits)}
                        for r in result.optimum.routes
                    ],
                    "feasible_count": result.feasible_count,
                    "explored_count": result.explored_count,
                },
                sort_keys=True,
            )
        )
    else:
        print(f"explored: {result.explored_count}, feasible: {result.feasible_count}")
        if result.optimum is None:
            print("no feasible solution")
        else:
            print(f"optimal fitness: {result.optimal_fitness}")
            for route in result.optimum.routes:
                print(f"  vehicle {route.vehicle}: {list(route.visits)}")
    if result.optimum is None:
        return EXIT_NO_FEASIBLE
    return EXIT_OK


def cmd_bench(args) -> int:
    seed = args.seed if args.seed is not None else _fallback_seed()
    kernels.set_workers(args.workers)
    records = []
    for n_prime in args.n:
        for k in args.k:
            cells = {pop: [] for pop in args.pop}
            for inst_idx in range(args.instances):
                inst_seed = seed * 100003 + n_prime * 101 + k * 17 + inst_idx
                instance = generate_random(GeneratorParams(n_prime=n_prime, k=k, seed=inst_seed))
                for pop in args.pop:
                    for rep in range(args.seeds):
                        params = GaParams(
                            population_size=pop,
                            generations=args.gens,
                            seed=seed * 7919 + inst_idx * 131 + rep,
                            mode=_mode(args.mode),
                        )
                        result = run_ga(instance, params)
                        cells[pop].append(result)
            for pop in args.pop:
                runs = cells[pop]
                fitnesses = [r.best_fitness for r in runs]
                distances = [r.best_distance for r in runs]
                records.append(
                    {
                        "n_prime": n_prime,
                        "k": k,
                        "pop": pop,
                        "gens": args.gens,
                        "runs": len(runs),
                        "min_distance": min(distances),
                        "mean_distance": sum(distances) / len(distances),
                        "min_fitness": min(fitnesses),
                        "mean_fitness": sum(fitnesses) / len(fitnesses),
                        "feasible_rate": sum(r.feasible for r in runs) / len(runs),
                    }
                )
    lines = [json.dumps(rec, sort_keys=True) for rec in records]
    if args.out:
        try:
            Path(args.out).write_text("\n".join(lines) + "\n", encoding="utf-8")
        except OSError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
    if args.format == "machine":
        for line in lines:
            print(line)
    else:
        print(
            "  N'   k   pop  runs     min dist    mean dist      min fit     mean fit   feas"
        )
        for rec in records:
            print(
                f"{rec['n_prime']:>4} {rec['k']:>3} {rec['pop']:>5} {rec['runs']:>5} "
                f"{rec['min_distance']:>12.2f} {rec['mean_distance']:>12.2f} "
                f"{rec['min_fitness']:>12.2f} {rec['mean_fitness']:>12.2f} "
                f"{rec['feasible_rate']:>6.2f}"
            )
    return EXIT_OK


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "generate":
            return cmd_generate(args)
        if args.command == "solve":
            return cmd_solve(args)
        if args.command == "validate":
            return cmd_validate(args)
        if args.command == "oracle":
            return cmd_oracle(args)
        if args.command == "bench":
            return cmd_bench(args)
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    parser.error(f"unknown command {args.command!r}")
    return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
