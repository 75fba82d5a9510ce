"""Experiment matrices, rank tables, and rank-sum statistics.

A matrix crosses instances x variants x seeds, producing one RunRecord per
cell entry. Variants name a selection scheme plus an optional transfer
mode ("rl@continue"); seeds within a (instance, variant) group run as one
sequence so transfer modes keep their semantics. Reporting follows the
rank-comparison methodology: per-cell ranks across variants, averaged per
instance and grand, plus two-sided Wilcoxon rank-sum tests.
"""

from __future__ import annotations

import csv
import itertools
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .colony import AbcConfig, first_reach, run_sequence
from .problem import SukpInstance


@dataclass(frozen=True)
class Variant:
    """One matrix column: a label, a scheme, and a transfer mode."""

    name: str
    scheme: str
    transfer: str = "fresh"
    experience_path: str | None = None

    @classmethod
    def parse(cls, text: str, experience_path: str | None = None) -> "Variant":
        scheme, _, mode = text.partition("@")
        return cls(
            name=text, scheme=scheme, transfer=mode or "fresh",
            experience_path=experience_path if mode in ("frozen", "continue") else None,
        )


@dataclass(frozen=True)
class RunRecord:
    instance: str
    scheme: str
    mode: str
    seed: int
    best_fitness: float
    evals_to_target: int | None
    wall_time_s: float


@dataclass
class RankTable:
    schemes: tuple[str, ...]
    instances: tuple[str, ...]
    per_instance: dict[tuple[str, str], float]   # (instance, scheme) -> mean rank
    grand: dict[str, float]                      # scheme -> grand mean rank


@dataclass
class MatrixResult:
    records: list[RunRecord]
    failures: list[tuple[str, str, str]]         # (instance, variant, error)


def _run_group(task):
    instance_id, instance, variant, seeds, base_config = task
    config = replace(
        base_config, scheme=variant.scheme, transfer=variant.transfer,
        experience_path=variant.experience_path,
    )
    rows = []
    started = time.perf_counter()
    results = run_sequence(instance, config, seeds)
    elapsed = time.perf_counter() - started
    per_run = elapsed / len(seeds)
    for seed, result in zip(seeds, results):
        rows.append((instance_id, variant.name, variant.transfer, int(seed),
                     result.best_fitness, result.history, per_run))
    return rows


def run_matrix(
    instances,
    variants,
    seeds,
    config: AbcConfig,
    parallel: int = 1,
    target_ratio: float = 0.99,
) -> MatrixResult:
    """Run every (instance, variant, seed) combination.

    ``instances`` maps instance ids to SukpInstance objects. Records are
    reproducible from their seeds and independent of execution order.
    evals_to_target is filled post hoc against a per-instance target: the
    best fitness any run reached, scaled by ``target_ratio``. Failed groups
    are reported, never silently dropped.
    """
    instances = dict(instances)
    variants = [v if isinstance(v, Variant) else Variant.parse(v) for v in variants]
    seeds = [int(s) for s in seeds]
    if not instances or not variants or not seeds:
        raise ValueError("matrix needs at least one instance, variant, and seed")
    tasks = [
        (instance_id, instance, variant, seeds, config)
        for instance_id, instance in instances.items()
        for variant in variants
    ]
    failures = []
    raw_rows = []
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            futures = {pool.submit(_run_group, task): task for task in tasks}
            for future, task in futures.items():
                try:
                    raw_rows.extend(future.result())
                except Exception as exc:  # noqa: BLE001 - report, never drop
                    failures.append((task[0], task[2].name, str(exc)))
    else:
        for task in tasks:
            try:
                raw_rows.extend(_run_group(task))
            except Exception as exc:  # noqa: BLE001
                failures.append((task[0], task[2].name, str(exc)))

    best_by_instance: dict[str, float] = {}
    for instance_id, _, _, _, fitness, _, _ in raw_rows:
        best_by_instance[instance_id] = max(
            best_by_instance.get(instance_id, -math.inf), fitness
        )
    records = []
    for instance_id, name, mode, seed, fitness, history, wall in raw_rows:
        target = target_ratio * best_by_instance[instance_id]
        records.append(RunRecord(
            instance=instance_id, scheme=name, mode=mode, seed=seed,
            best_fitness=fitness, evals_to_target=first_reach(history, target),
            wall_time_s=wall,
        ))
    records.sort(key=lambda r: (r.instance, r.scheme, r.seed))
    return MatrixResult(records=records, failures=failures)


@dataclass(frozen=True)
class WilcoxonResult:
    u_statistic: float
    p_value: float
    direction: str   # which sample holds the greater rank sum: "a", "b", "tie"


def _midranks(values) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    values = np.asarray(values, dtype=np.float64)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(values.shape[0])
    i = 0
    while i < values.shape[0]:
        j = i
        while j + 1 < values.shape[0] and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


_EXACT_LIMIT = 16


def wilcoxon_rank_sum(a, b) -> WilcoxonResult:
    """Two-sided rank-sum test of two independent samples.

    With n_a + n_b <= 16 the p value is exact: every assignment of pooled
    ranks to sample a is enumerated and p = 2 * min(P(W <= w), P(W >= w)),
    capped at 1. Larger samples use the normal approximation with tie and
    continuity corrections. Requires at least 3 observations per sample.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n_a, n_b = a.shape[0], b.shape[0]
    if n_a < 3 or n_b < 3:
        raise ValueError("each sample needs at least 3 observations")
    n = n_a + n_b
    ranks = _midranks(np.concatenate([a, b]))
    w_a = float(ranks[:n_a].sum())
    w_b = float(ranks[n_a:].sum())
    u_a = w_a - n_a * (n_a + 1) / 2.0
    if w_a > w_b:
        direction = "a"
    elif w_b > w_a:
        direction = "b"
    else:
        direction = "tie"

    if n <= _EXACT_LIMIT:
        tol = 1e-9
        at_most = at_least = total = 0
        for combo in itertools.combinations(range(n), n_a):
            w = ranks[list(combo)].sum()
            total += 1
            if w <= w_a + tol:
                at_most += 1
            if w >= w_a - tol:
                at_least += 1
        p = min(1.0, 2.0 * min(at_most / total, at_least / total))
        return WilcoxonResult(u_statistic=u_a, p_value=p, direction=direction)

    mean = n_a * (n + 1) / 2.0
    _, tie_counts = np.unique(ranks, return_counts=True)
    tie_term = float(((tie_counts**3) - tie_counts).sum())
    variance = n_a * n_b / 12.0 * ((n + 1) - tie_term / (n * (n - 1)))
    if variance <= 0.0:
        return WilcoxonResult(u_statistic=u_a, p_value=1.0, direction=direction)
    delta = w_a - mean
    if delta > 0.5:
        z = (delta - 0.5) / math.sqrt(variance)
    elif delta < -0.5:
        z = (delta + 0.5) / math.sqrt(variance)
    else:
        z = 0.0
    p = min(1.0, math.erfc(abs(z) / math.sqrt(2.0)))
    return WilcoxonResult(u_statistic=u_a, p_value=p, direction=direction)


def rank_table(records, key: str = "fitness") -> RankTable:
    """Rank variants within each (instance, seed) cell, then average.

    Rank 1 is best: the highest fitness, or the fewest evaluations to
    target when ``key="evals"`` (runs that never reached the target rank
    worst). Ties share their average rank. Every cell must hold exactly one
    record per scheme; offending coordinates are reported otherwise.
    """
    if key not in ("fitness", "evals"):
        raise ValueError("key must be 'fitness' or 'evals'")
    schemes = tuple(sorted({r.scheme for r in records}))
    instances = tuple(sorted({r.instance for r in records}))
    cells: dict[tuple[str, int], dict[str, RunRecord]] = {}
    for record in records:
        cell = cells.setdefault((record.instance, record.seed), {})
        if record.scheme in cell:
            raise ValueError(
                f"duplicate record for instance={record.instance} "
                f"seed={record.seed} scheme={record.scheme}"
            )
        cell[record.scheme] = record
    incomplete = [
        f"instance={instance} seed={seed} missing={sorted(set(schemes) - set(cell))}"
        for (instance, seed), cell in sorted(cells.items())
        if len(cell) != len(schemes)
    ]
    if incomplete:
        raise ValueError("incomplete rank cells: " + "; ".join(incomplete))

    rank_sums: dict[tuple[str, str], float] = {}
    counts: dict[tuple[str, str], int] = {}
    for (instance, _seed), cell in cells.items():
        if key == "fitness":
            values = [-cell[s].best_fitness for s in schemes]
        else:
            values = [
                math.inf if cell[s].evals_to_target is None else cell[s].evals_to_target
                for s in schemes
            ]
        ranks = _midranks(np.nan_to_num(values, posinf=1e300))
        for scheme, rank in zip(schemes, ranks):
            rank_sums[instance, scheme] = rank_sums.get((instance, scheme), 0.0) + rank
            counts[instance, scheme] = counts.get((instance, scheme), 0) + 1
    per_instance = {
        key_: rank_sums[key_] / counts[key_] for key_ in rank_sums
    }
    grand = {
        scheme: float(np.mean([per_instance[i, scheme] for i in instances]))
        for scheme in schemes
    }
    return RankTable(
        schemes=schemes, instances=instances,
        per_instance=per_instance, grand=grand,
    )


def per_cell_ranks(records, key: str = "fitness") -> dict[str, list[float]]:
    """Each scheme's rank within every (instance, seed) cell, 1 = best.

    The scale-free per-cell quantity behind the rank tables; suitable for
    rank-sum tests across instances with unlike fitness scales.
    """
    if key not in ("fitness", "evals"):
        raise ValueError("key must be 'fitness' or 'evals'")
    cells: dict[tuple[str, int], dict[str, RunRecord]] = {}
    for record in records:
        cells.setdefault((record.instance, record.seed), {})[record.scheme] = record
    out: dict[str, list[float]] = {}
    for cell in cells.values():
        schemes = sorted(cell)
        if key == "fitness":
            values = [-cell[s].best_fitness for s in schemes]
        else:
            values = [
                math.inf if cell[s].evals_to_target is None else cell[s].evals_to_target
                for s in schemes
            ]
        ranks = _midranks(np.nan_to_num(values, posinf=1e300))
        for scheme, rank in zip(schemes, ranks):
            out.setdefault(scheme, []).append(float(rank))
    return out


def instance_group(instance_id: str) -> str:
    """Instance family for plot aggregation: the id up to its last '_'."""
    head, _, tail = instance_id.rpartition("_")
    return head if head else instance_id


def _format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


RECORD_COLUMNS = (
    "instance", "scheme", "mode", "seed", "best_fitness",
    "evals_to_target", "wall_time_s",
)


def emit_results(records, table: RankTable | None, records_path, ranks_path, plot_path):
    """Write the records CSV, the per-instance rank CSV, and the plot-data
    file of (instance group, scheme, mean rank) triples."""
    with open(records_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(RECORD_COLUMNS)
        for r in sorted(records, key=lambda r: (r.instance, r.scheme, r.seed)):
            writer.writerow([
                r.instance, r.scheme, r.mode, r.seed,
                _format_cell(r.best_fitness), _format_cell(r.evals_to_target),
                _format_cell(r.wall_time_s),
            ])
    with open(ranks_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["instance", "scheme", "mean_rank"])
        if table is not None:
            for instance in table.instances:
                for scheme in table.schemes:
                    writer.writerow([
                        instance, scheme,
                        _format_cell(table.per_instance[instance, scheme]),
                    ])
    with open(plot_path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["instance_group", "scheme", "mean_rank"])
        if table is not None:
            groups = sorted({instance_group(i) for i in table.instances})
            for group in groups:
                members = [i for i in table.instances if instance_group(i) == group]
                for scheme in table.schemes:
                    mean = float(np.mean([
                        table.per_instance[i, scheme] for i in members
                    ]))
                    writer.writerow([group, scheme, _format_cell(mean)])


def read_records_csv(path) -> list[RunRecord]:
    with open(path, newline="") as handle:
        reader = csv.DictReader(handle)
        records = []
        for row in reader:
            records.append(RunRecord(
                instance=row["instance"], scheme=row["scheme"], mode=row["mode"],
                seed=int(row["seed"]), best_fitness=float(row["best_fitness"]),
                evals_to_target=(
                    int(row["evals_to_target"]) if row["evals_to_target"] else None
                ),
                wall_time_s=float(row["wall_time_s"]),
            ))
    return records
