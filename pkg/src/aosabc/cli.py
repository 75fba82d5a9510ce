"""Command-line entry point.

Subcommands: solve (one colony run), bench (an experiment matrix with rank
and rank-sum reporting), oracle (exact optimum of a small instance), gen
(write a random instance), experience-inspect (summarize an experience
file). Flags override config-file keys, which override built-in defaults.

Exit codes: 0 success, 2 usage error, 3 I/O error, 4 dimension or
configuration mismatch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import bench as bench_mod
from . import colony as colony_mod
from . import config as config_mod
from . import credit as credit_mod
from . import problem as problem_mod
from .selection import SCHEME_KINDS

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_CONFIG = 4


class CliError(Exception):
    def __init__(self, code: int, message: str):
        super().__init__(message)
        self.code = code


def _load_instance(path) -> problem_mod.SukpInstance:
    try:
        with open(path) as handle:
            text = handle.read()
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read instance file {path}: {exc.strerror}") from exc
    try:
        return problem_mod.parse_instance(text)
    except problem_mod.InstanceParseError as exc:
        raise CliError(EXIT_CONFIG, f"bad instance file {path}: {exc}") from exc


def _read_config_file(path) -> dict:
    try:
        return config_mod.read_config(path)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read config file {path}: {exc.strerror}") from exc
    except config_mod.ConfigError as exc:
        raise CliError(EXIT_CONFIG, f"bad config file {path}: {exc}") from exc


_SOLVER_KEYS = {
    "colony_size": int, "limit": int, "budget": int, "seed": int,
    "scheme": str, "transfer": str, "experience": str,
    "epsilon": float, "p_min": float, "alpha": float,
    "pursuit_rate": float, "ucb_c": float, "beta": float, "gamma": float,
    "credit_mode": str, "use_cluster": bool, "use_q": bool,
    "archive_capacity": int, "target_fitness": float,
}


def _build_abc_config(file_values: dict, args, objective_count: int) -> colony_mod.AbcConfig:
    """Defaults, overridden by config-file keys, overridden by flags."""
    merged: dict[str, object] = {}
    for key, cast in _SOLVER_KEYS.items():
        if key in file_values:
            try:
                merged[key] = cast(file_values[key])
            except (TypeError, ValueError) as exc:
                raise CliError(EXIT_CONFIG, f"config key {key!r}: {exc}") from exc
    if "operators" in file_values:
        merged["operators"] = config_mod.as_string_list(file_values["operators"], "operators")
    if "weights" in file_values:
        merged["weights"] = config_mod.as_float_list(file_values["weights"], "weights")

    flag_map = {
        "scheme": "scheme", "seed": "seed", "colony_size": "colony_size",
        "limit": "limit", "budget": "budget", "transfer": "transfer",
        "experience": "experience", "epsilon": "epsilon", "p_min": "p_min",
        "alpha": "alpha", "pursuit_rate": "pursuit_rate", "ucb_c": "ucb_c",
        "beta": "beta", "gamma": "gamma", "credit_mode": "credit_mode",
        "archive_capacity": "archive_capacity", "target_fitness": "target_fitness",
    }
    for key, attr in flag_map.items():
        value = getattr(args, attr, None)
        if value is not None:
            merged[key] = value
    if getattr(args, "operators", None):
        merged["operators"] = config_mod.as_string_list(args.operators, "operators")
    if getattr(args, "weights", None):
        merged["weights"] = config_mod.as_float_list(args.weights, "weights")

    config = colony_mod.AbcConfig(
        colony_size=merged.get("colony_size", 20),
        limit=merged.get("limit", 50),
        budget=merged.get("budget", 40_000),
        scheme=merged.get("scheme", "rl"),
        operators=tuple(merged.get("operators", colony_mod.DEFAULT_POOL)),
        weights=tuple(
            merged.get("weights", (1.0 / objective_count,) * objective_count)
        ),
        seed=merged.get("seed", 0),
        epsilon=merged.get("epsilon", 0.1),
        p_min=merged.get("p_min", 0.05),
        alpha=merged.get("alpha", 0.1),
        pursuit_rate=merged.get("pursuit_rate", 0.8),
        ucb_c=merged.get("ucb_c", 1.0),
        learning_rate=merged.get("beta", 0.1),
        discount=merged.get("gamma", 0.9),
        credit_mode=merged.get("credit_mode", "similarity"),
        use_cluster=bool(merged.get("use_cluster", True)),
        use_q=bool(merged.get("use_q", True)),
        transfer=merged.get("transfer", "fresh"),
        experience_path=merged.get("experience"),
        archive_capacity=merged.get("archive_capacity", 100),
        target_fitness=merged.get("target_fitness"),
    )
    if config.scheme not in SCHEME_KINDS:
        raise CliError(
            EXIT_CONFIG,
            f"unknown scheme {config.scheme!r}; valid schemes: {', '.join(SCHEME_KINDS)}",
        )
    return config


def _write_history_csv(history, path):
    with open(path, "w", newline="") as handle:
        handle.write("evaluations,best_fitness\n")
        for evaluations, fitness in history:
            handle.write(f"{evaluations},{fitness!r}\n")


def _cmd_solve(args) -> int:
    file_values = _read_config_file(args.config) if args.config else {}
    instance_path = args.instance
    if instance_path is None and "instance" in file_values:
        base = os.path.dirname(os.path.abspath(args.config))
        candidate = str(file_values["instance"])
        instance_path = (
            candidate if os.path.isabs(candidate) else os.path.join(base, candidate)
        )
    if instance_path is None:
        raise CliError(EXIT_USAGE, "no instance given (argument or config key)")
    instance = _load_instance(instance_path)
    config = _build_abc_config(file_values, args, instance.objective_count)
    try:
        result = colony_mod.run(instance, config)
    except credit_mod.ExperienceError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    except (ValueError, OSError) as exc:
        code = EXIT_IO if isinstance(exc, OSError) else EXIT_CONFIG
        raise CliError(code, str(exc)) from exc

    out_dir = args.out_dir or str(file_values.get("out_dir", "."))
    try:
        os.makedirs(out_dir, exist_ok=True)
        summary = {
            "instance": os.fspath(instance_path),
            "scheme": config.scheme,
            "seed": config.seed,
            "budget": config.budget,
            "evaluations": result.evaluations,
            "best_fitness": result.best_fitness,
            "best_objectives": [float(v) for v in result.best_evaluation.objectives],
            "union_weight": result.best_evaluation.union_weight,
            "capacity": instance.capacity,
            "solution": "".join(str(int(b)) for b in result.best_solution),
            "evals_to_target": result.evals_to_target,
            "operator_counts": {
                name: int(count)
                for name, count in zip(config.operators, result.operator_counts)
            },
            "scout_count": result.scout_count,
            "archive_size": len(result.archive),
        }
        with open(os.path.join(out_dir, "summary.json"), "w") as handle:
            json.dump(summary, handle, indent=2, sort_keys=True)
            handle.write("\n")
        _write_history_csv(result.history, os.path.join(out_dir, "history.csv"))
        result.archive.write_csv(os.path.join(out_dir, "archive.csv"))
        if args.save_experience:
            credit_mod.save_experience(result.credit_model, args.save_experience)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write outputs: {exc}") from exc

    print(f"best_fitness {result.best_fitness!r}")
    print(f"solution {summary['solution']}")
    print(f"evaluations {result.evaluations}")
    return EXIT_OK


def _cmd_bench(args) -> int:
    values = _read_config_file(args.config)
    for key in ("instances", "variants"):
        if key not in values:
            raise CliError(EXIT_CONFIG, f"bench config needs the {key!r} key")
    instance_paths = config_mod.as_string_list(values["instances"], "instances")
    base_dir = os.path.dirname(os.path.abspath(args.config))
    instances = {}
    for path in instance_paths:
        full = path if os.path.isabs(path) else os.path.join(base_dir, path)
        instance_id = os.path.splitext(os.path.basename(path))[0]
        instances[instance_id] = _load_instance(full)
    objective_counts = {i.objective_count for i in instances.values()}
    if len(objective_counts) != 1:
        raise CliError(EXIT_CONFIG, "all benchmark instances must share one objective count")

    experience = values.get("experience")
    variants = [
        bench_mod.Variant.parse(text, experience_path=experience)
        for text in config_mod.as_string_list(values["variants"], "variants")
    ]
    if "seed_list" in values:
        seeds = [int(s) for s in config_mod.as_float_list(values["seed_list"], "seed_list")]
    else:
        seed_count = int(values.get("seeds", 10))
        base_seed = int(values.get("seed", 0))
        seeds = colony_mod.derive_seeds(base_seed, seed_count)

    class _Plain:
        pass

    config = _build_abc_config(values, _Plain(), objective_counts.pop())
    parallel = args.parallel if args.parallel is not None else int(values.get("parallel", 1))
    target_ratio = float(values.get("target_ratio", 0.99))
    rank_key = str(values.get("rank_key", "fitness"))

    matrix = bench_mod.run_matrix(
        instances, variants, seeds, config,
        parallel=parallel, target_ratio=target_ratio,
    )
    try:
        table = bench_mod.rank_table(matrix.records, key=rank_key)
    except ValueError as exc:
        table = None
        table_error = str(exc)
    else:
        table_error = None

    out_dir = args.out_dir or str(values.get("out_dir", "."))
    try:
        os.makedirs(out_dir, exist_ok=True)
        bench_mod.emit_results(
            matrix.records, table,
            os.path.join(out_dir, "records.csv"),
            os.path.join(out_dir, "ranks.csv"),
            os.path.join(out_dir, "plot_data.csv"),
        )
        report_lines = _bench_report(matrix, table, table_error, rank_key,
                                     config.operators)
        with open(os.path.join(out_dir, "report.txt"), "w") as handle:
            handle.write("\n".join(report_lines) + "\n")
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write outputs: {exc}") from exc
    print("\n".join(report_lines))
    return EXIT_OK if not matrix.failures else EXIT_CONFIG


def _bench_report(matrix, table, table_error, rank_key, operators) -> list[str]:
    lines = [
        f"records {len(matrix.records)}",
        f"operators {', '.join(operators)}",
    ]
    for instance_id, variant, error in matrix.failures:
        lines.append(f"FAILED instance={instance_id} variant={variant}: {error}")
    if table is None:
        lines.append(f"rank table unavailable: {table_error}")
        return lines
    lines.append(f"grand mean ranks by {rank_key} (1 = best):")
    ordered = sorted(table.grand.items(), key=lambda kv: kv[1])
    for scheme, rank in ordered:
        lines.append(f"  {scheme:16s} {rank:.3f}")
    lines.append("ordering " + " < ".join(scheme for scheme, _ in ordered))
    cell_ranks = bench_mod.per_cell_ranks(matrix.records, key=rank_key)
    schemes = sorted(cell_ranks)
    for first, second in ((a, b) for i, a in enumerate(schemes) for b in schemes[i + 1:]):
        sample_a, sample_b = cell_ranks[first], cell_ranks[second]
        if len(sample_a) >= 3 and len(sample_b) >= 3:
            outcome = bench_mod.wilcoxon_rank_sum(sample_a, sample_b)
            # lower per-cell rank is better, so the smaller rank sum wins
            better = {"a": second, "b": first, "tie": "neither"}[outcome.direction]
            lines.append(
                f"wilcoxon per-cell ranks {first} vs {second}: "
                f"p={outcome.p_value:.6g} better={better}"
            )
    return lines


def _cmd_oracle(args) -> int:
    instance = _load_instance(args.instance)
    if instance.item_count > problem_mod.MAX_BRUTE_FORCE_ITEMS:
        raise CliError(
            EXIT_CONFIG,
            f"instance has {instance.item_count} items; the oracle supports "
            f"at most {problem_mod.MAX_BRUTE_FORCE_ITEMS}",
        )
    weights = None
    if args.weights:
        weights = config_mod.as_float_list(args.weights, "weights")
        if len(weights) != instance.objective_count:
            raise CliError(EXIT_CONFIG, "weight count does not match instance objectives")
    bits, evaluation = problem_mod.brute_force_optimum(instance, weights)
    if weights is None:
        weights = [1.0 / instance.objective_count] * instance.objective_count
    fitness = float(np.dot(weights, evaluation.objectives))
    print(f"optimum {fitness!r}")
    print("solution " + "".join(str(int(b)) for b in bits))
    return EXIT_OK


def _cmd_gen(args) -> int:
    rng = np.random.default_rng(args.seed)
    try:
        instance = problem_mod.generate_instance(
            rng, args.items, args.elements, args.objectives,
            density=args.density, capacity_ratio=args.capacity_ratio,
        )
    except ValueError as exc:
        raise CliError(EXIT_CONFIG, str(exc)) from exc
    comment = (
        f"generated: items={args.items} elements={args.elements} "
        f"objectives={args.objectives} density={args.density} "
        f"capacity_ratio={args.capacity_ratio} seed={args.seed}"
    )
    try:
        with open(args.out, "w") as handle:
            handle.write(problem_mod.format_instance(instance, comment=comment))
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot write {args.out}: {exc}") from exc
    print(f"wrote {args.out}")
    return EXIT_OK


def _cmd_experience_inspect(args) -> int:
    try:
        with open(args.path) as handle:
            document = json.load(handle)
    except OSError as exc:
        raise CliError(EXIT_IO, f"cannot read {args.path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise CliError(EXIT_IO, f"cannot parse {args.path}: {exc}") from exc
    if not isinstance(document, dict) or document.get("version") != credit_mod.EXPERIENCE_VERSION:
        raise CliError(
            EXIT_CONFIG,
            f"unsupported experience document (version "
            f"{document.get('version') if isinstance(document, dict) else None!r})",
        )
    counters = np.asarray(document["counters"])
    q_table = np.asarray(document["q_table"])
    print(f"operators {document['operators']}")
    print(f"objectives {document['objectives']}")
    print(f"solution_length {document['solution_length']}")
    print(f"beta {document['beta']}")
    print(f"gamma {document['gamma']}")
    print(f"successes_total {int(counters.sum())}")
    for op in range(counters.shape[0]):
        per_obj = " ".join(str(int(c)) for c in np.atleast_1d(counters[op]))
        q_vals = " ".join(f"{q:.6g}" for q in np.atleast_1d(q_table[op]))
        print(f"operator {op}: successes [{per_obj}] q [{q_vals}]")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="aosabc",
        description="Adaptive-operator-selection bee colony solver for set-union knapsack problems.",
        epilog="Flag precedence: command-line flags override config-file keys, "
               "which override built-in defaults.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    solve = sub.add_parser("solve", help="run the solver on one instance")
    solve.add_argument("instance", nargs="?",
                       help="instance file path (or the config key 'instance')")
    solve.add_argument("--config", help="key = value run configuration file")
    solve.add_argument("--scheme", choices=SCHEME_KINDS)
    solve.add_argument("--seed", type=int)
    solve.add_argument("--colony-size", dest="colony_size", type=int)
    solve.add_argument("--limit", type=int)
    solve.add_argument("--budget", type=int)
    solve.add_argument("--operators", help="comma-separated operator names")
    solve.add_argument("--weights", help="comma-separated objective weights")
    solve.add_argument("--epsilon", type=float)
    solve.add_argument("--p-min", dest="p_min", type=float)
    solve.add_argument("--alpha", type=float)
    solve.add_argument("--pursuit-rate", dest="pursuit_rate", type=float)
    solve.add_argument("--ucb-c", dest="ucb_c", type=float)
    solve.add_argument("--beta", type=float, help="credit learning rate")
    solve.add_argument("--gamma", type=float, help="credit discount")
    solve.add_argument("--credit-mode", dest="credit_mode", choices=("similarity", "literal"))
    solve.add_argument("--transfer", choices=credit_mod.TRANSFER_MODES)
    solve.add_argument("--experience", help="experience file to load")
    solve.add_argument("--save-experience", dest="save_experience",
                       help="write the final credit model here")
    solve.add_argument("--target-fitness", dest="target_fitness", type=float)
    solve.add_argument("--archive-capacity", dest="archive_capacity", type=int)
    solve.add_argument("--out-dir", dest="out_dir")
    solve.set_defaults(func=_cmd_solve)

    bench = sub.add_parser("bench", help="run an experiment matrix from a config file")
    bench.add_argument("config", help="matrix configuration file")
    bench.add_argument("--parallel", type=int, help="concurrent run groups")
    bench.add_argument("--out-dir", dest="out_dir")
    bench.set_defaults(func=_cmd_bench)

    oracle = sub.add_parser("oracle", help="exact optimum by exhaustive enumeration")
    oracle.add_argument("instance")
    oracle.add_argument("--weights", help="comma-separated objective weights")
    oracle.set_defaults(func=_cmd_oracle)

    gen = sub.add_parser("gen", help="generate a random instance file")
    gen.add_argument("out", help="output instance path")
    gen.add_argument("--items", type=int, required=True)
    gen.add_argument("--elements", type=int, required=True)
    gen.add_argument("--objectives", type=int, default=1)
    gen.add_argument("--density", type=float, default=0.3)
    gen.add_argument("--capacity-ratio", dest="capacity_ratio", type=float, default=0.75)
    gen.add_argument("--seed", type=int, default=0)
    gen.set_defaults(func=_cmd_gen)

    inspect = sub.add_parser("experience-inspect", help="summarize an experience file")
    inspect.add_argument("path")
    inspect.set_defaults(func=_cmd_experience_inspect)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CliError as exc:
        print(f"aosabc: {exc}", file=sys.stderr)
        return exc.code


if __name__ == "__main__":
    sys.exit(main())
