"""Operator selection schemes.

Five rules decide which pool operator handles the next move:

* random: uniform choice, the baseline;
* pm (probability matching): selection probabilities proportional to each
  operator's share of recent reward, floored at p_min;
* ap (adaptive pursuit): probabilities chased toward the current best
  operator at a fixed pursuit rate;
* ucb: argmax of recent quality plus a confidence-width bonus;
* rl: epsilon-greedy argmax over the credit model's effective credits,
  scalarized across objectives by the run's weight vector.

The rl scheme keeps no quality state of its own; the credit model owns it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

SCHEME_KINDS = ("random", "pm", "ap", "ucb", "rl")

_SIMPLEX_TOL = 1e-9


def as_weight_vector(weights, objective_count: int) -> np.ndarray:
    """Validate an objective weight vector: non-negative, summing to one."""
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (objective_count,):
        raise ValueError(
            f"weight vector has shape {w.shape}, expected ({objective_count},)"
        )
    if np.any(w < 0.0):
        raise ValueError("objective weights must be non-negative")
    if abs(float(w.sum()) - 1.0) > _SIMPLEX_TOL:
        raise ValueError("objective weights must sum to 1")
    return w


def scalarize_credits(credits: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Collapse an (operators, objectives) credit array to one value per
    operator via the weighted sum. A one-hot weight vector reproduces the
    corresponding objective column exactly."""
    return credits @ weights


def argmax_random_tie(values, rng: np.random.Generator) -> int:
    values = values.tolist() if isinstance(values, np.ndarray) else list(values)
    top = max(values)
    ties = [i for i, v in enumerate(values) if v == top]
    if len(ties) == 1:
        return ties[0]
    return ties[int(rng.integers(len(ties)))]


@dataclass
class SchemeState:
    """Mutable per-run state of one selection scheme."""

    kind: str
    n_operators: int
    probabilities: np.ndarray | None = None   # pm/ap only
    empirical_quality: np.ndarray = field(default=None)  # type: ignore[assignment]
    pull_counts: np.ndarray = field(default=None)        # type: ignore[assignment]
    epsilon: float = 0.1
    p_min: float = 0.05
    alpha: float = 0.1
    pursuit_rate: float = 0.8
    ucb_c: float = 1.0

    def __post_init__(self):
        if self.kind not in SCHEME_KINDS:
            raise ValueError(f"unknown scheme {self.kind!r}, expected one of {SCHEME_KINDS}")
        if self.n_operators < 1:
            raise ValueError("scheme needs a non-empty operator pool")
        for name in ("epsilon", "p_min", "alpha", "pursuit_rate"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} must be in [0, 1], got {value}")
        if self.ucb_c <= 0.0:
            raise ValueError("ucb_c must be positive")
        if self.kind in ("pm", "ap") and self.n_operators * self.p_min > 1.0:
            raise ValueError("p_min too large: n_operators * p_min must not exceed 1")
        if self.empirical_quality is None:
            self.empirical_quality = np.zeros(self.n_operators)
        if self.pull_counts is None:
            self.pull_counts = np.zeros(self.n_operators, dtype=np.int64)
        if self.kind in ("pm", "ap") and self.probabilities is None:
            self.probabilities = np.full(self.n_operators, 1.0 / self.n_operators)


def make_scheme(kind: str, n_operators: int, **params) -> SchemeState:
    return SchemeState(kind=kind, n_operators=n_operators, **params)


def select_operator(
    state: SchemeState,
    credits: np.ndarray | None,
    weights: np.ndarray,
    rng: np.random.Generator,
) -> int:
    """Pick an operator index. Ties in any argmax break uniformly at random."""
    n = state.n_operators
    if state.kind == "random":
        return int(rng.integers(n))
    if state.kind in ("pm", "ap"):
        threshold = rng.random()
        acc = 0.0
        for i in range(n - 1):
            acc += state.probabilities[i]
            if acc > threshold:
                return i
        return n - 1
    if state.kind == "ucb":
        unpulled = np.flatnonzero(state.pull_counts == 0)
        if unpulled.shape[0]:
            return int(unpulled[rng.integers(unpulled.shape[0])])
        total = float(state.pull_counts.sum())
        bonus = state.ucb_c * np.sqrt(2.0 * np.log(total) / state.pull_counts)
        return argmax_random_tie(state.empirical_quality + bonus, rng)
    # rl
    if credits is None:
        raise ValueError("rl selection requires a credit view")
    if credits.shape[1] != weights.shape[0]:
        raise ValueError("weight vector length does not match credit objectives")
    if state.epsilon > 0.0 and rng.random() < state.epsilon:
        return int(rng.integers(n))
    if credits.shape[1] == 1 and weights[0] == 1.0:
        return argmax_random_tie(credits[:, 0], rng)
    return argmax_random_tie(scalarize_credits(credits, weights), rng)


def update_scheme(state: SchemeState, op: int, scalar_reward: float) -> None:
    """Feed the scalarized reward of a finished move back into the scheme.

    pm tracks each operator's exponentially discounted share of reward
    (unselected operators decay), then rebuilds the floored probability
    vector. ap and ucb track a recency-weighted mean reward of the selected
    operator; ap then pursues the incumbent best, ucb counts the pull.
    random needs no state; rl state lives in the credit model.
    """
    if not 0 <= op < state.n_operators:
        raise ValueError(f"operator index {op} outside pool of size {state.n_operators}")
    if state.kind in ("random", "rl"):
        return
    alpha = state.alpha
    quality = state.empirical_quality
    if state.kind == "pm":
        quality *= 1.0 - alpha
        quality[op] += alpha * scalar_reward
        total = float(quality.sum())
        if total > 0.0:
            scale = 1.0 - state.n_operators * state.p_min
            state.probabilities = state.p_min + scale * (quality / total)
        else:
            state.probabilities = np.full(state.n_operators, 1.0 / state.n_operators)
        return
    quality[op] = (1.0 - alpha) * quality[op] + alpha * scalar_reward
    if state.kind == "ap":
        # Deterministic lowest-index tie break: the update path carries no rng.
        best = int(np.argmax(quality))
        p_max = 1.0 - (state.n_operators - 1) * state.p_min
        target = np.full(state.n_operators, state.p_min)
        target[best] = p_max
        state.probabilities += state.pursuit_rate * (target - state.probabilities)
        return
    state.pull_counts[op] += 1
