"""Operator credit learning and persistence.

Each (operator, objective) pair carries three pieces of state:

* a cluster center in [0, 1]^m, the running mean of the solutions at which
  the operator improved that objective, so credit generalizes across the
  solution space (success states near the center score high);
* a success counter backing the running mean;
* a scalar value learned by the temporal-difference rule
  ``q <- q + beta * (r + gamma * next_best - q)``.

The credit a selection scheme sees for operator i on objective j at
solution x is ``similarity(x, center[i, j]) * (1 + q[i, j])`` where
similarity is ``1 / (1 + euclidean_distance)``. Either factor can be
switched off to isolate the mechanisms, and a "literal" mode replaces the
similarity by the raw distance. Models are serialized to a versioned JSON
file so later runs can warm-start from earlier experience, either frozen
(read-only) or with learning continuing.
"""

from __future__ import annotations

import json
import os
import tempfile
from dataclasses import dataclass

import numpy as np

from .problem import Evaluation

EXPERIENCE_VERSION = 1

TRANSFER_MODES = ("fresh", "frozen", "continue")
CREDIT_MODES = ("similarity", "literal")


class ExperienceError(Exception):
    """Base class for experience-file problems."""


class ExperienceFormatError(ExperienceError):
    """File is not a readable experience document."""


class ExperienceVersionError(ExperienceError):
    """File version is not supported."""


class ExperienceDimensionError(ExperienceError):
    """File dimensions do not match the run configuration."""


@dataclass
class CreditModel:
    centers: np.ndarray    # (operators, objectives, solution_length)
    counters: np.ndarray   # (operators, objectives), successes per pair
    q_table: np.ndarray    # (operators, objectives)
    learning_rate: float = 0.1
    discount: float = 0.9
    frozen: bool = False
    credit_mode: str = "similarity"
    use_cluster: bool = True
    use_q: bool = True

    def __post_init__(self):
        if self.credit_mode not in CREDIT_MODES:
            raise ValueError(f"credit_mode must be one of {CREDIT_MODES}")
        if not 0.0 <= self.learning_rate <= 1.0:
            raise ValueError("learning_rate must be in [0, 1]")
        if not 0.0 <= self.discount <= 1.0:
            raise ValueError("discount must be in [0, 1]")

    @property
    def operator_count(self) -> int:
        return self.centers.shape[0]

    @property
    def objective_count(self) -> int:
        return self.centers.shape[1]

    @property
    def solution_length(self) -> int:
        return self.centers.shape[2]

    def copy(self) -> "CreditModel":
        return CreditModel(
            centers=self.centers.copy(), counters=self.counters.copy(),
            q_table=self.q_table.copy(), learning_rate=self.learning_rate,
            discount=self.discount, frozen=self.frozen,
            credit_mode=self.credit_mode, use_cluster=self.use_cluster,
            use_q=self.use_q,
        )


def fresh_model(
    operator_count: int,
    objective_count: int,
    solution_length: int,
    learning_rate: float = 0.1,
    discount: float = 0.9,
    frozen: bool = False,
    credit_mode: str = "similarity",
    use_cluster: bool = True,
    use_q: bool = True,
) -> CreditModel:
    """Blank model: centers at the maximum-entropy point 0.5^m, zero
    counters and values, so every operator starts with identical credit."""
    return CreditModel(
        centers=np.full((operator_count, objective_count, solution_length), 0.5),
        counters=np.zeros((operator_count, objective_count), dtype=np.int64),
        q_table=np.zeros((operator_count, objective_count)),
        learning_rate=learning_rate, discount=discount, frozen=frozen,
        credit_mode=credit_mode, use_cluster=use_cluster, use_q=use_q,
    )


def compute_reward(prev: Evaluation, nxt: Evaluation) -> np.ndarray:
    """Per-objective reward: normalized improvement, clamped at zero.

    r_j = max(0, (f_j' - f_j) / (|f_j| + 1)); the +1 guards division at
    f_j = 0 and keeps rewards scale-free across objectives.
    """
    prev_obj = prev.objectives
    next_obj = nxt.objectives
    if prev_obj.shape != next_obj.shape:
        raise ValueError("evaluations have different objective counts")
    if prev_obj.shape == (1,):
        f_prev = float(prev_obj[0])
        r = (float(next_obj[0]) - f_prev) / (abs(f_prev) + 1.0)
        return np.array([r if r > 0.0 else 0.0])
    return np.maximum(0.0, (next_obj - prev_obj) / (np.abs(prev_obj) + 1.0))


def credit_of(model: CreditModel, x) -> np.ndarray:
    """Raw per-(operator, objective) credit of x against the cluster centers.

    Similarity mode returns 1 / (1 + distance) in (0, 1]; literal mode
    returns the distance itself.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.solution_length,):
        raise ValueError(
            f"solution length {x.shape} does not match model length {model.solution_length}"
        )
    diff = model.centers - x
    distance = np.sqrt(np.einsum("ijk,ijk->ij", diff, diff))
    if model.credit_mode == "literal":
        return distance
    distance += 1.0
    np.divide(1.0, distance, out=distance)
    return distance


def selection_credits(model: CreditModel, x) -> np.ndarray:
    """Effective credit used for operator selection: the cluster term times
    (1 + q). Disabled factors contribute 1."""
    if model.use_cluster:
        credits = credit_of(model, x)
        if model.use_q:
            credits *= 1.0 + model.q_table
        return credits
    if model.use_q:
        return 1.0 + model.q_table
    return np.ones_like(model.q_table)


def bellman_update(
    model: CreditModel, op: int, objective: int, reward: float, next_best_q: float
) -> bool:
    """Apply the temporal-difference step to one (operator, objective) entry.

    Returns False (skipped) on a frozen model, True otherwise.
    """
    if model.frozen:
        return False
    q = model.q_table[op, objective]
    model.q_table[op, objective] = q + model.learning_rate * (
        reward + model.discount * next_best_q - q
    )
    return True


def update_on_success(model: CreditModel, x_prime, op: int, rewards) -> bool:
    """Feed one move outcome into the model.

    The value update runs for every objective (zero rewards included),
    bootstrapping from the best effective credit at the successor solution
    x'. Objectives with a positive reward additionally count a success:
    their counter increments and their center takes one running-mean step
    toward x'. No-op (returning False) on frozen models.
    """
    if model.frozen:
        return False
    x_prime = np.asarray(x_prime, dtype=np.float64)
    rewards = np.asarray(rewards, dtype=np.float64)
    if rewards.shape != (model.objective_count,):
        raise ValueError("reward length does not match objective count")
    next_best = selection_credits(model, x_prime).max(axis=0)
    if model.objective_count == 1:
        reward = float(rewards[0])
        q = float(model.q_table[op, 0])
        model.q_table[op, 0] = q + model.learning_rate * (
            reward + model.discount * float(next_best[0]) - q
        )
        if reward > 0.0:
            count = int(model.counters[op, 0]) + 1
            model.counters[op, 0] = count
            center = model.centers[op, 0]
            center += (x_prime - center) / count
        return True
    q_row = model.q_table[op]
    model.q_table[op] = q_row + model.learning_rate * (
        rewards + model.discount * next_best - q_row
    )
    improved = np.flatnonzero(rewards > 0.0)
    if improved.shape[0]:
        model.counters[op, improved] += 1
        centers = model.centers[op, improved]
        model.centers[op, improved] = centers + (
            (x_prime - centers) / model.counters[op, improved, None]
        )
    return True


def save_experience(model: CreditModel, path) -> None:
    """Write the versioned experience document atomically (temp + rename)."""
    document = {
        "version": EXPERIENCE_VERSION,
        "operators": model.operator_count,
        "objectives": model.objective_count,
        "solution_length": model.solution_length,
        "centers": model.centers.tolist(),
        "counters": model.counters.tolist(),
        "q_table": model.q_table.tolist(),
        "beta": model.learning_rate,
        "gamma": model.discount,
    }
    path = os.fspath(path)
    directory = os.path.dirname(path) or "."
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as handle:
            json.dump(document, handle)
        os.replace(tmp_path, path)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise


def load_experience(
    path,
    mode: str,
    operator_count: int,
    objective_count: int,
    solution_length: int,
    learning_rate: float = 0.1,
    discount: float = 0.9,
    credit_mode: str = "similarity",
    use_cluster: bool = True,
    use_q: bool = True,
) -> CreditModel:
    """Build the starting model for a run under a transfer mode.

    fresh: ignore the file entirely and return a blank model. frozen: load
    and lock the model (updates become no-ops). continue: load and keep
    learning. Loading validates the version and that (operators,
    objectives, solution_length) match the run configuration before any
    state is built.
    """
    if mode not in TRANSFER_MODES:
        raise ValueError(f"transfer mode must be one of {TRANSFER_MODES}")
    if mode == "fresh":
        return fresh_model(
            operator_count, objective_count, solution_length,
            learning_rate=learning_rate, discount=discount,
            credit_mode=credit_mode, use_cluster=use_cluster, use_q=use_q,
        )
    try:
        with open(path) as handle:
            document = json.load(handle)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ExperienceFormatError(f"corrupt experience file {path}: {exc}") from exc
    if not isinstance(document, dict):
        raise ExperienceFormatError(f"corrupt experience file {path}: not an object")
    if document.get("version") != EXPERIENCE_VERSION:
        raise ExperienceVersionError(
            f"unsupported experience version {document.get('version')!r}, "
            f"expected {EXPERIENCE_VERSION}"
        )
    expected = {
        "operators": operator_count,
        "objectives": objective_count,
        "solution_length": solution_length,
    }
    for key, want in expected.items():
        if document.get(key) != want:
            raise ExperienceDimensionError(
                f"experience {key}={document.get(key)!r} does not match run configuration {want}"
            )
    try:
        centers = np.asarray(document["centers"], dtype=np.float64)
        counters = np.asarray(document["counters"], dtype=np.int64)
        q_table = np.asarray(document["q_table"], dtype=np.float64)
        beta = float(document["beta"])
        gamma = float(document["gamma"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ExperienceFormatError(f"corrupt experience file {path}: {exc}") from exc
    shape = (operator_count, objective_count, solution_length)
    if centers.shape != shape or counters.shape != shape[:2] or q_table.shape != shape[:2]:
        raise ExperienceDimensionError(
            f"experience arrays have shapes {centers.shape}/{counters.shape}/{q_table.shape}, "
            f"expected {shape}/{shape[:2]}/{shape[:2]}"
        )
    return CreditModel(
        centers=centers, counters=counters, q_table=q_table,
        learning_rate=beta, discount=gamma, frozen=(mode == "frozen"),
        credit_mode=credit_mode, use_cluster=use_cluster, use_q=use_q,
    )
