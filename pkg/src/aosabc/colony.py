"""Artificial bee colony search with pluggable operator selection.

One run cycles employed, onlooker, and scout phases over a colony of food
sources until the evaluation budget is spent. Every move selects an
operator through the configured scheme, applies it, repairs the candidate
to feasibility, evaluates it, feeds the reward back into the credit model
and the scheme, and greedily replaces the source when the scalarized
fitness improves. Runs are fully deterministic in the seed.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from . import credit as credit_mod
from . import problem as problem_mod
from .credit import CreditModel, compute_reward, selection_credits, update_on_success
from .moo import ParetoArchive
from .operators import DEFAULT_POOL, MoveContext, OperatorPool
from .problem import Evaluation, SukpInstance
from .selection import as_weight_vector, make_scheme, select_operator, update_scheme


@dataclass
class AbcConfig:
    colony_size: int = 20
    limit: int = 50
    budget: int = 40_000
    scheme: str = "rl"
    operators: tuple[str, ...] = DEFAULT_POOL
    weights: tuple[float, ...] = (1.0,)
    seed: int = 0
    epsilon: float = 0.1
    p_min: float = 0.05
    alpha: float = 0.1
    pursuit_rate: float = 0.8
    ucb_c: float = 1.0
    learning_rate: float = 0.1
    discount: float = 0.9
    credit_mode: str = "similarity"
    use_cluster: bool = True
    use_q: bool = True
    transfer: str = "fresh"
    experience_path: str | None = None
    archive_capacity: int | None = 100
    target_fitness: float | None = None

    def validate(self, instance: SukpInstance) -> None:
        if self.colony_size < 2:
            raise ValueError("colony_size must be at least 2")
        if self.limit < 0:
            raise ValueError("limit must be non-negative")
        if self.budget < self.colony_size:
            raise ValueError("budget must cover at least the initial colony")
        if self.transfer not in credit_mod.TRANSFER_MODES:
            raise ValueError(
                f"transfer mode must be one of {credit_mod.TRANSFER_MODES}"
            )
        as_weight_vector(self.weights, instance.objective_count)


@dataclass
class RunResult:
    best_solution: np.ndarray
    best_evaluation: Evaluation
    best_fitness: float
    history: list[tuple[int, float]]
    evals_to_target: int | None
    archive: ParetoArchive
    credit_model: CreditModel
    evaluations: int
    operator_counts: np.ndarray
    final_trials: tuple[int, ...]
    scout_count: int


@dataclass
class _Source:
    bits: np.ndarray
    evaluation: Evaluation
    fitness: float
    trials: int = 0


def _initial_model(instance, config, pool_size) -> CreditModel:
    if config.transfer != "fresh" and config.experience_path:
        return credit_mod.load_experience(
            config.experience_path, config.transfer,
            operator_count=pool_size,
            objective_count=instance.objective_count,
            solution_length=instance.item_count,
            learning_rate=config.learning_rate, discount=config.discount,
            credit_mode=config.credit_mode,
            use_cluster=config.use_cluster, use_q=config.use_q,
        )
    return credit_mod.fresh_model(
        pool_size, instance.objective_count, instance.item_count,
        learning_rate=config.learning_rate, discount=config.discount,
        frozen=(config.transfer == "frozen"),
        credit_mode=config.credit_mode,
        use_cluster=config.use_cluster, use_q=config.use_q,
    )


def run(
    instance: SukpInstance,
    config: AbcConfig,
    credit_model: CreditModel | None = None,
) -> RunResult:
    """Execute one seeded colony run and return its outcome.

    A caller-supplied credit model (for warm starts) is copied, never
    mutated; the returned result carries the run's final model.
    """
    config.validate(instance)
    pool = OperatorPool(config.operators)
    weights = as_weight_vector(config.weights, instance.objective_count)
    model = (
        credit_model.copy() if credit_model is not None
        else _initial_model(instance, config, len(pool))
    )
    if (
        model.operator_count != len(pool)
        or model.objective_count != instance.objective_count
        or model.solution_length != instance.item_count
    ):
        raise ValueError(
            "credit model dimensions do not match the pool and instance"
        )
    scheme = make_scheme(
        config.scheme, len(pool),
        epsilon=config.epsilon, p_min=config.p_min, alpha=config.alpha,
        pursuit_rate=config.pursuit_rate, ucb_c=config.ucb_c,
    )
    rng = np.random.default_rng(config.seed)
    archive = ParetoArchive(config.archive_capacity)
    colony_size = config.colony_size
    budget = config.budget
    limit = config.limit
    is_rl = config.scheme == "rl"
    single_objective = instance.objective_count == 1
    evaluations = 0
    scout_count = 0
    operator_counts = np.zeros(len(pool), dtype=np.int64)

    sources = []
    for _ in range(colony_size):
        bits, evaluation = problem_mod.random_feasible(instance, rng)
        evaluations += 1
        sources.append(_Source(bits, evaluation, 0.0))

    # Fixed normalization so scalarized fitness is comparable across one
    # whole run: per-objective maxima of the initial colony. A single
    # objective needs no scaling, which keeps fitness in raw profit units.
    if single_objective:
        scaled_weights = weights
    else:
        norms = np.max([s.evaluation.objectives for s in sources], axis=0)
        norms[norms <= 0.0] = 1.0
        scaled_weights = weights / norms

    def fitness_of(evaluation):
        if single_objective:
            return float(evaluation.objectives[0])
        return float(scaled_weights @ evaluation.objectives)

    best_bits = None
    best_eval = None
    best_fitness = -1.0
    for source in sources:
        source.fitness = fitness_of(source.evaluation)
        archive.insert(source.bits, source.evaluation.objectives)
        if source.fitness > best_fitness:
            best_bits, best_eval, best_fitness = (
                source.bits, source.evaluation, source.fitness
            )
    history = [(evaluations, best_fitness)]

    def move(index):
        nonlocal best_bits, best_eval, best_fitness, evaluations
        source = sources[index]
        credits = selection_credits(model, source.bits) if is_rl else None
        op = select_operator(scheme, credits, weights, rng)
        donor = int(rng.integers(colony_size - 1))
        if donor >= index:
            donor += 1
        candidate = pool.apply(
            op, MoveContext(source.bits, best_bits, sources[donor].bits), rng
        )
        candidate, evaluation = problem_mod.repair_and_evaluate(instance, candidate)
        evaluations += 1
        cand_fitness = fitness_of(evaluation)
        rewards = compute_reward(source.evaluation, evaluation)
        update_on_success(model, candidate, op, rewards)
        if single_objective:
            scheme_reward = float(rewards[0])
        else:
            scheme_reward = float(weights @ rewards)
        update_scheme(scheme, op, scheme_reward)
        operator_counts[op] += 1
        archive.insert(candidate, evaluation.objectives)
        if cand_fitness > source.fitness:
            source.bits = candidate
            source.evaluation = evaluation
            source.fitness = cand_fitness
            source.trials = 0
        elif source.trials <= limit:
            source.trials += 1
        if cand_fitness > best_fitness:
            best_bits, best_eval, best_fitness = candidate, evaluation, cand_fitness
            history.append((evaluations, best_fitness))

    while evaluations < budget:
        for i in range(colony_size):
            if evaluations >= budget:
                break
            move(i)
        for _ in range(colony_size):
            if evaluations >= budget:
                break
            total = 0.0
            for source in sources:
                if source.fitness > 0.0:
                    total += source.fitness
            if total > 0.0:
                threshold = rng.random() * total
                pick = colony_size - 1
                acc = 0.0
                for i, source in enumerate(sources):
                    if source.fitness > 0.0:
                        acc += source.fitness
                        if acc > threshold:
                            pick = i
                            break
            else:
                pick = int(rng.integers(colony_size))
            move(pick)
        for source in sources:
            if source.trials > limit:
                if evaluations >= budget:
                    break
                bits, evaluation = problem_mod.random_feasible(instance, rng)
                evaluations += 1
                source.bits = bits
                source.evaluation = evaluation
                source.fitness = fitness_of(evaluation)
                source.trials = 0
                scout_count += 1
                archive.insert(bits, evaluation.objectives)
                if source.fitness > best_fitness:
                    best_bits, best_eval, best_fitness = (
                        bits, evaluation, source.fitness
                    )
                    history.append((evaluations, best_fitness))

    if history[-1][0] != evaluations:
        history.append((evaluations, best_fitness))

    evals_to_target = None
    if config.target_fitness is not None:
        evals_to_target = first_reach(history, config.target_fitness)

    return RunResult(
        best_solution=best_bits, best_evaluation=best_eval,
        best_fitness=best_fitness, history=history,
        evals_to_target=evals_to_target, archive=archive, credit_model=model,
        evaluations=evaluations, operator_counts=operator_counts,
        final_trials=tuple(s.trials for s in sources), scout_count=scout_count,
    )


def first_reach(history, target: float) -> int | None:
    """Evaluation count at which a best-fitness history first reaches target."""
    for evaluations, fitness in history:
        if fitness >= target:
            return evaluations
    return None


def derive_seeds(base_seed: int, count: int) -> list[int]:
    rng = np.random.default_rng(base_seed)
    return [int(s) for s in rng.integers(0, 2**63, size=count)]


def run_sequence(
    instance: SukpInstance,
    config: AbcConfig,
    seeds,
    initial_model: CreditModel | None = None,
) -> list[RunResult]:
    """Run once per seed under the configured transfer mode.

    fresh starts every repetition from a blank model; frozen reuses one
    loaded read-only model throughout; continue chains each repetition's
    final model into the next.
    """
    model = initial_model
    if model is None and config.transfer != "fresh":
        model = _initial_model(instance, config, len(OperatorPool(config.operators)))
    results = []
    for seed in seeds:
        rep_config = dataclasses.replace(config, seed=int(seed))
        if config.transfer == "fresh":
            result = run(instance, rep_config)
        else:
            result = run(instance, rep_config, credit_model=model)
            if config.transfer == "continue":
                model = result.credit_model
        results.append(result)
    return results


def run_transfer_sequence(
    instance: SukpInstance, config: AbcConfig, repetitions: int
) -> list[RunResult]:
    """run_sequence over seeds derived deterministically from config.seed."""
    if repetitions < 1:
        raise ValueError("repetitions must be at least 1")
    return run_sequence(instance, config, derive_seeds(config.seed, repetitions))
