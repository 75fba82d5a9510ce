import itertools
import math

import numpy as np
import pytest
import scipy.stats

from aosabc import (
    AbcConfig,
    RunRecord,
    generate_instance,
    rank_table,
    run_matrix,
    wilcoxon_rank_sum,
)
from aosabc.bench import (
    Variant,
    emit_results,
    instance_group,
    per_cell_ranks,
    read_records_csv,
)


def oracle_rank_sum_p(a, b):
    """Independent enumeration of the exact two-sided rank-sum p value."""
    pooled = list(a) + list(b)
    n_a, n = len(a), len(pooled)
    # midranks by sorting with explicit tie groups
    indexed = sorted(range(n), key=lambda i: pooled[i])
    ranks = [0.0] * n
    i = 0
    while i < n:
        j = i
        while j + 1 < n and pooled[indexed[j + 1]] == pooled[indexed[i]]:
            j += 1
        for k in range(i, j + 1):
            ranks[indexed[k]] = (i + j) / 2 + 1
        i = j + 1
    observed = sum(ranks[:n_a])
    values = [sum(ranks[i] for i in combo)
              for combo in itertools.combinations(range(n), n_a)]
    le = sum(1 for v in values if v <= observed + 1e-9) / len(values)
    ge = sum(1 for v in values if v >= observed - 1e-9) / len(values)
    return min(1.0, 2.0 * min(le, ge))


class TestWilcoxon:
    def test_separated_triples(self):
        # all 20 assignments of C(6,3); only the observed one is as small,
        # and symmetry doubles it: p = 2/20
        result = wilcoxon_rank_sum([1, 2, 3], [4, 5, 6])
        assert result.u_statistic == 0.0
        assert result.p_value == pytest.approx(0.1, abs=1e-12)
        assert result.direction == "b"

    def test_separated_quadruples(self):
        result = wilcoxon_rank_sum([1, 2, 3, 4], [5, 6, 7, 8])
        assert result.u_statistic == 0.0
        assert result.p_value == pytest.approx(2 / 70, abs=1e-12)

    def test_identical_samples(self):
        result = wilcoxon_rank_sum([1, 2, 3], [1, 2, 3])
        assert result.p_value == pytest.approx(1.0, abs=1e-9)
        assert result.direction == "tie"

    def test_sample_size_guard(self):
        with pytest.raises(ValueError, match="at least 3"):
            wilcoxon_rank_sum([1, 2], [1, 2, 3])

    def test_exact_matches_enumeration_oracle_all_small_sizes(self, rng):
        for n_a in range(3, 8):
            for n_b in range(3, 11 - n_a):
                for case in range(3):
                    if case == 0:
                        a = rng.normal(size=n_a).round(2).tolist()
                        b = rng.normal(size=n_b).round(2).tolist()
                    elif case == 1:  # heavy ties
                        a = rng.integers(0, 3, n_a).astype(float).tolist()
                        b = rng.integers(0, 3, n_b).astype(float).tolist()
                    else:  # clear separation
                        a = (rng.random(n_a) + 5).tolist()
                        b = rng.random(n_b).tolist()
                    got = wilcoxon_rank_sum(a, b).p_value
                    want = oracle_rank_sum_p(a, b)
                    assert got == pytest.approx(want, abs=1e-12), (a, b)

    def test_exact_matches_scipy_without_ties(self, rng):
        for _ in range(20):
            a = rng.normal(size=5).tolist()
            b = rng.normal(size=6).tolist()
            mine = wilcoxon_rank_sum(a, b).p_value
            ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided",
                                           method="exact").pvalue
            assert mine == pytest.approx(ref, abs=1e-12)

    def test_approximation_matches_scipy(self, rng):
        for _ in range(10):
            a = rng.normal(size=12).tolist()
            b = (rng.normal(size=15) + 0.5).tolist()
            mine = wilcoxon_rank_sum(a, b).p_value
            ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided",
                                           method="asymptotic").pvalue
            assert mine == pytest.approx(ref, rel=1e-9)

    def test_approximation_with_ties_matches_scipy(self, rng):
        a = rng.integers(0, 5, 12).astype(float).tolist()
        b = rng.integers(1, 6, 13).astype(float).tolist()
        mine = wilcoxon_rank_sum(a, b).p_value
        ref = scipy.stats.mannwhitneyu(a, b, alternative="two-sided",
                                       method="asymptotic").pvalue
        assert mine == pytest.approx(ref, rel=1e-9)

    def test_direction_reports_greater_rank_sum(self):
        assert wilcoxon_rank_sum([5, 6, 7], [1, 2, 3]).direction == "a"
        assert wilcoxon_rank_sum([1, 2, 3], [5, 6, 7]).direction == "b"


def record(instance, scheme, seed, fitness, evals=None):
    return RunRecord(
        instance=instance, scheme=scheme, mode="fresh", seed=seed,
        best_fitness=fitness, evals_to_target=evals, wall_time_s=0.0,
    )


class TestRankTable:
    def test_tie_shares_average_rank(self):
        records = [
            record("i1", "a", 0, 10.0), record("i1", "b", 0, 7.0),
            record("i1", "c", 0, 7.0),
        ]
        table = rank_table(records)
        assert table.per_instance["i1", "a"] == 1.0
        assert table.per_instance["i1", "b"] == 2.5
        assert table.per_instance["i1", "c"] == 2.5

    def test_single_scheme_all_ranks_one(self):
        records = [record("i1", "only", s, float(s)) for s in range(4)]
        table = rank_table(records)
        assert table.grand == {"only": 1.0}

    def test_identical_schemes_share_grand_rank(self):
        records = []
        for inst in ("i1", "i2"):
            for seed in range(3):
                records.append(record(inst, "a", seed, 5.0))
                records.append(record(inst, "b", seed, 5.0))
        table = rank_table(records)
        assert table.grand["a"] == table.grand["b"] == 1.5

    def test_monotone_transform_invariance(self, rng):
        records, transformed = [], []
        for inst in ("i1", "i2", "i3"):
            for seed in range(4):
                for scheme in ("a", "b", "c"):
                    fitness = float(rng.integers(0, 50))
                    records.append(record(inst, scheme, seed, fitness))
                    transformed.append(record(inst, scheme, seed, math.exp(fitness / 10)))
        assert rank_table(records).per_instance == rank_table(transformed).per_instance

    def test_best_in_every_cell_gets_grand_one(self):
        records = []
        for inst in ("i1", "i2"):
            for seed in range(3):
                records.append(record(inst, "hero", seed, 100.0))
                records.append(record(inst, "zero", seed, 1.0))
        assert rank_table(records).grand == {"hero": 1.0, "zero": 2.0}

    def test_evals_ranking_prefers_fewer_with_none_worst(self):
        records = [
            record("i1", "fast", 0, 10.0, evals=100),
            record("i1", "slow", 0, 10.0, evals=900),
            record("i1", "never", 0, 10.0, evals=None),
        ]
        table = rank_table(records, key="evals")
        assert table.per_instance["i1", "fast"] == 1.0
        assert table.per_instance["i1", "slow"] == 2.0
        assert table.per_instance["i1", "never"] == 3.0

    def test_incomplete_cell_reported_with_coordinates(self):
        records = [
            record("i1", "a", 0, 1.0), record("i1", "b", 0, 2.0),
            record("i1", "a", 1, 1.0),
        ]
        with pytest.raises(ValueError, match=r"instance=i1 seed=1.*'b'"):
            rank_table(records)

    def test_duplicate_record_rejected(self):
        records = [record("i1", "a", 0, 1.0), record("i1", "a", 0, 2.0)]
        with pytest.raises(ValueError, match="duplicate"):
            rank_table(records)

    def test_per_cell_ranks_match_rank_table_means(self):
        records = []
        rng = np.random.default_rng(8)
        for inst in ("i1", "i2"):
            for seed in range(5):
                for scheme in ("a", "b", "c"):
                    records.append(record(inst, scheme, seed, float(rng.integers(50))))
        ranks = per_cell_ranks(records)
        table = rank_table(records)
        for scheme in ("a", "b", "c"):
            assert len(ranks[scheme]) == 10
            assert float(np.mean(ranks[scheme])) == pytest.approx(
                np.mean([table.per_instance[i, scheme] for i in ("i1", "i2")])
            )


def small_matrix(parallel=1):
    instances = {
        f"tiny_{k}": generate_instance(
            np.random.default_rng(300 + k), 8, 6, density=0.35, capacity_ratio=0.5
        )
        for k in range(2)
    }
    config = AbcConfig(colony_size=6, limit=8, budget=200)
    return run_matrix(
        instances, ["random", "pm", "rl"], [11, 12, 13, 14, 15], config,
        parallel=parallel,
    )


def strip_wall_time(records):
    """Every field except the inherently non-reproducible wall time."""
    return [
        (r.instance, r.scheme, r.mode, r.seed, r.best_fitness, r.evals_to_target)
        for r in records
    ]


class TestRunMatrix:
    def test_cardinality(self):
        matrix = small_matrix()
        assert len(matrix.records) == 2 * 3 * 5
        assert not matrix.failures

    def test_deterministic_rerun(self):
        a, b = small_matrix(), small_matrix()
        assert strip_wall_time(a.records) == strip_wall_time(b.records)

    def test_execution_order_independent(self):
        serial = small_matrix(parallel=1)
        concurrent = small_matrix(parallel=2)
        assert strip_wall_time(serial.records) == strip_wall_time(concurrent.records)

    def test_single_scheme_ranks_all_one(self):
        instances = {"one": generate_instance(np.random.default_rng(1), 8, 6)}
        matrix = run_matrix(
            instances, ["rl"], [1, 2, 3], AbcConfig(colony_size=6, budget=150)
        )
        assert rank_table(matrix.records).grand == {"rl": 1.0}

    def test_failures_recorded_not_dropped(self, monkeypatch):
        import aosabc.bench as bench_mod

        real = bench_mod.run_sequence

        def flaky(instance, config, seeds, initial_model=None):
            if config.scheme == "pm":
                raise RuntimeError("injected failure")
            return real(instance, config, seeds, initial_model)

        monkeypatch.setattr(bench_mod, "run_sequence", flaky)
        instances = {"one": generate_instance(np.random.default_rng(2), 8, 6)}
        matrix = run_matrix(
            instances, ["random", "pm"], [1, 2, 3],
            AbcConfig(colony_size=6, budget=150),
        )
        assert matrix.failures == [("one", "pm", "injected failure")]
        assert {r.scheme for r in matrix.records} == {"random"}

    def test_evals_to_target_filled_against_common_target(self):
        matrix = small_matrix()
        by_instance = {}
        for r in matrix.records:
            by_instance.setdefault(r.instance, []).append(r)
        for records in by_instance.values():
            best = max(r.best_fitness for r in records)
            for r in records:
                if r.best_fitness >= 0.99 * best:
                    assert r.evals_to_target is not None

    def test_transfer_variant_parses(self):
        v = Variant.parse("rl@continue", experience_path="exp.json")
        assert v.scheme == "rl" and v.transfer == "continue"
        assert v.experience_path == "exp.json"
        plain = Variant.parse("pm")
        assert plain.transfer == "fresh" and plain.experience_path is None


class TestEmit:
    def test_roundtrip_preserves_rank_table(self, tmp_path):
        matrix = small_matrix()
        table = rank_table(matrix.records)
        emit_results(
            matrix.records, table, tmp_path / "records.csv",
            tmp_path / "ranks.csv", tmp_path / "plot.csv",
        )
        again = read_records_csv(tmp_path / "records.csv")
        assert rank_table(again).per_instance == table.per_instance
        assert rank_table(again).grand == table.grand

    def test_empty_records_emit_headers_only(self, tmp_path):
        emit_results([], None, tmp_path / "r.csv", tmp_path / "k.csv", tmp_path / "p.csv")
        assert (tmp_path / "r.csv").read_text().strip() == (
            "instance,scheme,mode,seed,best_fitness,evals_to_target,wall_time_s"
        )
        assert (tmp_path / "k.csv").read_text().strip() == "instance,scheme,mean_rank"

    def test_plot_rows_are_groups_times_schemes(self, tmp_path):
        matrix = small_matrix()
        table = rank_table(matrix.records)
        emit_results(
            matrix.records, table, tmp_path / "records.csv",
            tmp_path / "ranks.csv", tmp_path / "plot.csv",
        )
        plot_lines = (tmp_path / "plot.csv").read_text().strip().splitlines()
        groups = {instance_group(i) for i in table.instances}
        assert len(plot_lines) == 1 + len(groups) * len(table.schemes)

    def test_instance_group(self):
        assert instance_group("m100_n85_03") == "m100_n85"
        assert instance_group("solo") == "solo"
