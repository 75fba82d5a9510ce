import dataclasses

import numpy as np
import pytest

from aosabc import (
    AbcConfig,
    brute_force_optimum,
    derive_seeds,
    evaluate,
    fresh_model,
    generate_instance,
    run,
    run_sequence,
    run_transfer_sequence,
    save_experience,
)


def tiny_instance(seed=77, m=10, n=8):
    return generate_instance(
        np.random.default_rng(seed), m, n, density=0.3, capacity_ratio=0.55
    )


def small_config(**overrides):
    base = dict(colony_size=8, limit=10, budget=600, seed=5, scheme="rl")
    base.update(overrides)
    return AbcConfig(**base)


def assert_same_result(a, b):
    assert np.array_equal(a.best_solution, b.best_solution)
    assert a.best_fitness == b.best_fitness
    assert a.history == b.history
    assert a.evaluations == b.evaluations
    assert np.array_equal(a.operator_counts, b.operator_counts)
    assert np.array_equal(a.credit_model.centers, b.credit_model.centers)
    assert np.array_equal(a.credit_model.q_table, b.credit_model.q_table)
    assert np.array_equal(a.credit_model.counters, b.credit_model.counters)
    assert [e.objectives for e in a.archive] == [e.objectives for e in b.archive]


@pytest.mark.parametrize("scheme", ["random", "pm", "ap", "ucb", "rl"])
def test_deterministic_in_seed(scheme):
    inst = tiny_instance()
    config = small_config(scheme=scheme)
    assert_same_result(run(inst, config), run(inst, config))


def test_different_seeds_differ():
    inst = tiny_instance()
    a = run(inst, small_config(seed=1))
    b = run(inst, small_config(seed=2))
    assert a.history != b.history or not np.array_equal(a.best_solution, b.best_solution)


def test_budget_accounting():
    inst = tiny_instance()
    config = small_config(budget=500, colony_size=7)
    result = run(inst, config)
    assert config.budget <= result.evaluations <= config.budget + config.colony_size
    assert result.evaluations == result.history[-1][0]


def test_history_monotone_and_best_consistent():
    inst = tiny_instance()
    result = run(inst, small_config(budget=2000))
    fitness = [f for _, f in result.history]
    assert fitness == sorted(fitness)
    evals = [e for e, _ in result.history]
    assert evals == sorted(evals)
    assert result.best_fitness == fitness[-1]
    # single objective: fitness is the raw profit of the best solution
    assert result.best_fitness == float(result.best_evaluation.objectives[0])


def test_everything_reported_is_feasible():
    inst = tiny_instance()
    result = run(inst, small_config(budget=1500))
    assert result.best_evaluation.feasible
    check = evaluate(inst, result.best_solution)
    assert check.feasible
    assert np.array_equal(check.objectives, result.best_evaluation.objectives)
    for entry in result.archive:
        assert evaluate(inst, np.array(entry.solution, dtype=float)).feasible


def test_solver_never_beats_brute_force():
    inst = tiny_instance(seed=11, m=10)
    optimum = float(brute_force_optimum(inst)[1].objectives[0])
    for seed in range(3):
        result = run(inst, small_config(seed=seed, budget=2000))
        assert result.best_fitness <= optimum + 1e-9


def test_limit_zero_triggers_scouts_and_caps_trials():
    inst = tiny_instance()
    result = run(inst, small_config(limit=0, budget=800))
    assert result.scout_count > 0
    assert all(t <= 1 for t in result.final_trials)  # limit + 1


def test_trials_capped_at_limit_plus_one():
    inst = tiny_instance()
    result = run(inst, small_config(limit=3, budget=1500))
    assert all(t <= 4 for t in result.final_trials)


def test_operator_counts_match_moves():
    inst = tiny_instance()
    config = small_config(budget=900, colony_size=6)
    result = run(inst, config)
    moves = int(result.operator_counts.sum())
    # every evaluation beyond initialization and scouting is one move
    assert moves == result.evaluations - config.colony_size - result.scout_count


def test_config_validation():
    inst = tiny_instance()
    with pytest.raises(ValueError, match="colony_size"):
        run(inst, AbcConfig(colony_size=1))
    with pytest.raises(ValueError, match="budget"):
        run(inst, AbcConfig(colony_size=30, budget=10))
    with pytest.raises(ValueError, match="weight"):
        run(inst, small_config(weights=(0.5, 0.5)))
    with pytest.raises(ValueError, match="transfer"):
        run(inst, small_config(transfer="sideways"))


def test_model_dimension_mismatch_fails_before_running():
    inst = tiny_instance()
    with pytest.raises(ValueError, match="dimensions"):
        run(inst, small_config(), credit_model=fresh_model(4, 1, 99))


def test_caller_model_never_mutated():
    inst = tiny_instance()
    model = fresh_model(4, 1, inst.item_count)
    snapshot = model.centers.copy()
    run(inst, small_config(budget=400), credit_model=model)
    assert np.array_equal(model.centers, snapshot)
    assert np.all(model.q_table == 0.0)


def test_evals_to_target():
    inst = tiny_instance()
    baseline = run(inst, small_config(budget=1200))
    midpoint = baseline.history[len(baseline.history) // 2][1]
    result = run(inst, small_config(budget=1200, target_fitness=midpoint))
    assert result.evals_to_target is not None
    assert result.evals_to_target <= result.evaluations
    unreachable = run(inst, small_config(budget=1200, target_fitness=baseline.best_fitness * 10))
    assert unreachable.evals_to_target is None


def test_single_objective_equals_replicated_multi_objective_run():
    # A duplicated-profit bi-objective encoding with equal weights must
    # replay the single-objective run move for move: the scalarization
    # collapses to the same decisions and the rng streams stay aligned.
    from aosabc.problem import replicate_objectives

    inst = tiny_instance(seed=21)
    twin = replicate_objectives(inst, 2)
    config_single = small_config(budget=1500)
    config_twin = dataclasses.replace(config_single, weights=(0.5, 0.5))
    a = run(inst, config_single)
    b = run(twin, config_twin)
    assert np.array_equal(a.best_solution, b.best_solution)
    assert [e for e, _ in a.history] == [e for e, _ in b.history]
    assert np.array_equal(a.operator_counts, b.operator_counts)
    assert float(b.best_evaluation.objectives[0]) == a.best_fitness


def test_one_hot_weights_reduce_to_single_objective_run():
    # With weights (1, 0) on a duplicated-profit instance, objective 2 is
    # carried along but never steers: decisions match the plain run.
    from aosabc.problem import replicate_objectives

    inst = tiny_instance(seed=22)
    twin = replicate_objectives(inst, 2)
    a = run(inst, small_config(budget=1200))
    b = run(twin, dataclasses.replace(small_config(budget=1200), weights=(1.0, 0.0)))
    assert np.array_equal(a.best_solution, b.best_solution)
    assert [e for e, _ in a.history] == [e for e, _ in b.history]
    assert np.array_equal(a.operator_counts, b.operator_counts)


@pytest.mark.parametrize("overrides", [
    {"credit_mode": "literal"},
    {"use_cluster": False},
    {"use_q": False},
    {"use_cluster": False, "use_q": False},
])
def test_credit_configuration_switches_run_deterministically(overrides):
    inst = tiny_instance()
    config = small_config(budget=600, **overrides)
    a, b = run(inst, config), run(inst, config)
    assert np.array_equal(a.best_solution, b.best_solution)
    assert a.history == b.history
    assert a.best_evaluation.feasible


def test_multi_objective_archive_collects_tradeoffs():
    inst = generate_instance(
        np.random.default_rng(9), 12, 9, objective_count=2,
        density=0.3, capacity_ratio=0.5,
    )
    result = run(inst, AbcConfig(
        colony_size=8, limit=10, budget=2000, seed=3,
        scheme="rl", weights=(0.5, 0.5),
    ))
    assert len(result.archive) >= 1
    vectors = result.archive.objective_vectors()
    for vec in vectors:
        assert len(vec) == 2


class TestTransferSequences:
    def test_derive_seeds_deterministic(self):
        assert derive_seeds(42, 5) == derive_seeds(42, 5)
        assert derive_seeds(42, 5) != derive_seeds(43, 5)

    def test_fresh_mode_runs_are_independent(self):
        inst = tiny_instance()
        config = small_config(transfer="fresh", budget=500)
        seeds = derive_seeds(7, 3)
        results = run_sequence(inst, config, seeds)
        # each repetition equals a standalone fresh run with the same seed
        for seed, result in zip(seeds, results):
            standalone = run(inst, dataclasses.replace(config, seed=seed))
            assert_same_result(result, standalone)

    def test_continue_mode_chains_models(self):
        inst = tiny_instance()
        config = small_config(transfer="continue", budget=500)
        seeds = derive_seeds(8, 2)
        chained = run_sequence(inst, config, seeds)
        # repetition 2 must equal a run seeded with repetition 1's model
        standalone = run(
            inst, dataclasses.replace(config, seed=seeds[1]),
            credit_model=chained[0].credit_model,
        )
        assert_same_result(chained[1], standalone)
        # and must differ from a blank-model run (the experience matters)
        blank = run(inst, dataclasses.replace(config, seed=seeds[1]))
        assert not np.array_equal(
            blank.credit_model.q_table, chained[1].credit_model.q_table
        )

    def test_frozen_mode_reuses_model_read_only(self, tmp_path):
        inst = tiny_instance()
        trained = run(inst, small_config(budget=600)).credit_model
        path = tmp_path / "exp.json"
        save_experience(trained, path)
        config = small_config(transfer="frozen", budget=500, experience_path=str(path))
        results = run_sequence(inst, config, derive_seeds(9, 3))
        for result in results:
            assert np.array_equal(result.credit_model.centers, trained.centers)
            assert np.array_equal(result.credit_model.q_table, trained.q_table)
            assert result.credit_model.frozen

    def test_run_transfer_sequence_repetition_count(self):
        inst = tiny_instance()
        results = run_transfer_sequence(inst, small_config(budget=400), 3)
        assert len(results) == 3
        with pytest.raises(ValueError, match="repetitions"):
            run_transfer_sequence(inst, small_config(), 0)
