"""Set-union knapsack problem: instances, evaluation, repair, exact solving.

An instance consists of m items, each covering a subset of n weighted
elements, and one or more profit vectors over the items. A binary solution
selects items; its cost is the total weight of the *union* of covered
elements, which must not exceed the capacity. Objectives are maximized.

Solutions are plain numpy vectors with entries 0/1 (any numeric dtype is
accepted; internally float64 is used).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

# brute_force_optimum enumerates 2^m subsets; refuse anything bigger.
MAX_BRUTE_FORCE_ITEMS = 24

_ENUM_CHUNK = 1 << 14


class InstanceParseError(ValueError):
    """Malformed instance text. Carries the 1-based offending line number."""

    def __init__(self, line: int, message: str):
        super().__init__(f"line {line}: {message}")
        self.line = line


class Evaluation(NamedTuple):
    """Outcome of evaluating one solution: per-objective profits, the weight
    of the covered-element union, and whether that weight fits the capacity."""

    objectives: np.ndarray
    union_weight: float
    feasible: bool


@dataclass(frozen=True)
class SukpInstance:
    profits: np.ndarray      # (objective_count, item_count), >= 0
    weights: np.ndarray      # (element_count,), >= 0
    membership: np.ndarray   # (item_count, element_count), entries in {0, 1}
    capacity: float

    def __post_init__(self):
        profits = np.asarray(self.profits, dtype=np.float64)
        weights = np.asarray(self.weights, dtype=np.float64)
        membership = np.asarray(self.membership, dtype=np.float64)
        if profits.ndim == 1:
            profits = profits[None, :]
        if profits.ndim != 2 or membership.ndim != 2 or weights.ndim != 1:
            raise ValueError("profits must be 2-D, membership 2-D, weights 1-D")
        m, n = membership.shape
        if m < 1 or n < 1 or profits.shape[0] < 1:
            raise ValueError("instance dimensions must be positive")
        if profits.shape[1] != m:
            raise ValueError(
                f"profits have {profits.shape[1]} columns, expected {m} items"
            )
        if weights.shape[0] != n:
            raise ValueError(
                f"{weights.shape[0]} element weights given, expected {n}"
            )
        if not np.all(np.isfinite(profits)) or np.any(profits < 0):
            raise ValueError("profits must be finite and non-negative")
        if not np.all(np.isfinite(weights)) or np.any(weights < 0):
            raise ValueError("element weights must be finite and non-negative")
        if not math.isfinite(self.capacity) or self.capacity < 0:
            raise ValueError("capacity must be finite and non-negative")
        if not np.all((membership == 0) | (membership == 1)):
            raise ValueError("membership entries must be 0 or 1")
        row_sizes = membership.sum(axis=1)
        if np.any(row_sizes == 0):
            empty = int(np.flatnonzero(row_sizes == 0)[0])
            raise ValueError(f"item {empty + 1} covers no elements")
        for field, value in (
            ("profits", profits),
            ("weights", weights),
            ("membership", membership),
        ):
            object.__setattr__(self, field, value)
            value.setflags(write=False)
        object.__setattr__(self, "capacity", float(self.capacity))
        # Mean profit per item, the numerator of the repair drop rule,
        # floored so zero-profit items still order by the marginal weight.
        object.__setattr__(
            self, "_item_value", np.maximum(profits.mean(axis=0), 1e-12)
        )

    @property
    def item_count(self) -> int:
        return self.membership.shape[0]

    @property
    def element_count(self) -> int:
        return self.membership.shape[1]

    @property
    def objective_count(self) -> int:
        return self.profits.shape[0]

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


def _tokenize(text: str):
    """Yield (line_number, tokens) for data lines; '#' starts a comment."""
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if line:
            yield lineno, line.split()


def _parse_numbers(lineno, tokens, expected, what, allow_negative=False):
    if len(tokens) != expected:
        raise InstanceParseError(
            lineno, f"{what} has {len(tokens)} entries, expected {expected}"
        )
    values = []
    for tok in tokens:
        try:
            value = float(tok)
        except ValueError:
            raise InstanceParseError(lineno, f"invalid number {tok!r} in {what}") from None
        if not math.isfinite(value):
            raise InstanceParseError(lineno, f"non-finite value in {what}")
        if value < 0 and not allow_negative:
            raise InstanceParseError(lineno, f"negative value in {what}")
        values.append(value)
    return values


def parse_instance(text: str) -> SukpInstance:
    """Parse the line-oriented instance format.

    Layout: header ``m n O``, then the capacity, then O profit rows of m
    entries, one row of n element weights, and m membership rows of n
    entries in {0, 1}. ``#`` comments and blank lines are ignored.
    """
    lines = list(_tokenize(text))
    last_line = len(text.splitlines()) or 1
    cursor = 0

    def next_line(what):
        nonlocal cursor
        if cursor >= len(lines):
            raise InstanceParseError(last_line, f"unexpected end of file, expected {what}")
        lineno, tokens = lines[cursor]
        cursor += 1
        return lineno, tokens

    lineno, tokens = next_line("header 'm n O'")
    if len(tokens) != 3:
        raise InstanceParseError(lineno, "malformed header, expected 'm n O'")
    try:
        m, n, n_obj = (int(t) for t in tokens)
    except ValueError:
        raise InstanceParseError(lineno, "malformed header, expected three integers") from None
    if m < 1 or n < 1 or n_obj < 1:
        raise InstanceParseError(lineno, "header dimensions must be positive")

    lineno, tokens = next_line("capacity")
    capacity = _parse_numbers(lineno, tokens, 1, "capacity")[0]

    profits = []
    for j in range(n_obj):
        lineno, tokens = next_line(f"profit row {j + 1}")
        profits.append(_parse_numbers(lineno, tokens, m, f"profit row {j + 1}"))

    lineno, tokens = next_line("element weights")
    weights = _parse_numbers(lineno, tokens, n, "element weights")

    membership = np.zeros((m, n), dtype=np.float64)
    for i in range(m):
        lineno, tokens = next_line(f"membership row {i + 1}")
        if len(tokens) != n:
            raise InstanceParseError(
                lineno, f"membership row {i + 1} has {len(tokens)} entries, expected {n}"
            )
        for e, tok in enumerate(tokens):
            if tok == "0":
                continue
            if tok == "1":
                membership[i, e] = 1.0
            else:
                raise InstanceParseError(
                    lineno, f"membership entries must be 0 or 1, got {tok!r}"
                )
        if not membership[i].any():
            raise InstanceParseError(lineno, f"item {i + 1} covers no elements")

    if cursor < len(lines):
        raise InstanceParseError(lines[cursor][0], "unexpected trailing data")

    return SukpInstance(
        profits=np.asarray(profits), weights=np.asarray(weights),
        membership=membership, capacity=capacity,
    )


def _format_number(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))


def format_instance(instance: SukpInstance, comment: str | None = None) -> str:
    """Serialize an instance back to the text format parse_instance reads."""
    out = []
    if comment:
        out.extend(f"# {line}" for line in comment.splitlines())
    out.append(f"{instance.item_count} {instance.element_count} {instance.objective_count}")
    out.append(_format_number(instance.capacity))
    for row in instance.profits:
        out.append(" ".join(_format_number(v) for v in row))
    out.append(" ".join(_format_number(v) for v in instance.weights))
    for row in instance.membership:
        out.append(" ".join(str(int(v)) for v in row))
    return "\n".join(out) + "\n"


def as_solution(x) -> np.ndarray:
    """Coerce to a float64 0/1 vector without copying float64 input."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1:
        raise ValueError("solution must be a 1-D vector")
    return x


def _check_length(instance, x):
    if x.shape[0] != instance.item_count:
        raise ValueError(
            f"solution length {x.shape[0]} does not match item count {instance.item_count}"
        )


def evaluate(instance: SukpInstance, x) -> Evaluation:
    """Profits, union weight, and feasibility of a solution; length must be m."""
    x = as_solution(x)
    _check_length(instance, x)
    cover = x @ instance.membership
    union_weight = float(instance.weights @ (cover > 0.0))
    return Evaluation(
        objectives=instance.profits @ x,
        union_weight=union_weight,
        feasible=union_weight <= instance.capacity,
    )


def repair_and_evaluate(instance: SukpInstance, x: np.ndarray) -> tuple[np.ndarray, Evaluation]:
    """Repair to feasibility and evaluate in one pass.

    Expects a float64 0/1 vector of the right length. Feasible input is
    returned as-is (the same array, not a copy); infeasible input is dropped
    to feasibility in place. See ``repair`` for the drop rule.
    """
    cover = x @ instance.membership
    union_weight = float(instance.weights @ (cover > 0.0))
    capacity = instance.capacity
    if union_weight <= capacity:
        return x, Evaluation(instance.profits @ x, union_weight, True)
    item_value = instance._item_value
    membership = instance.membership
    weights = instance.weights
    while union_weight > capacity:
        marginal = membership @ (weights * (cover == 1.0))
        # Zero-marginal drops free no weight; the floor gives them an
        # astronomical density so they lose to any useful drop, and when
        # every selected item is zero-marginal, argmin degrades to the
        # cheapest-item fallback.
        np.maximum(marginal, 1e-30, out=marginal)
        density = item_value / marginal
        density[x == 0.0] = np.inf
        drop = int(np.argmin(density))
        x[drop] = 0.0
        cover -= membership[drop]
        union_weight = float(weights @ (cover > 0.0))
    return x, Evaluation(instance.profits @ x, union_weight, True)


def repair(instance: SukpInstance, x) -> np.ndarray:
    """Drop items from an infeasible solution until the union fits.

    Greedy rule: repeatedly remove the selected item with the smallest
    mean-profit to marginal-union-weight ratio, where the marginal weight
    of an item is the weight of elements only it covers among the current
    selection. Items freeing no weight are never dropped while a useful
    drop exists; if no drop frees weight, the cheapest item goes. Feasible
    input is returned unchanged (as a copy).
    """
    x = as_solution(x).copy()
    _check_length(instance, x)
    return repair_and_evaluate(instance, x)[0]


def brute_force_optimum(
    instance: SukpInstance, objective_weights=None
) -> tuple[np.ndarray, Evaluation]:
    """Exhaustively maximize the weighted objective sum over all 2^m subsets.

    Only feasible subsets count; ties go to the lexicographically smallest
    bit vector. Guarded to m <= MAX_BRUTE_FORCE_ITEMS.
    """
    m = instance.item_count
    if m > MAX_BRUTE_FORCE_ITEMS:
        raise ValueError(
            f"brute force supports at most {MAX_BRUTE_FORCE_ITEMS} items, got {m}"
        )
    if objective_weights is None:
        objective_weights = np.full(instance.objective_count, 1.0 / instance.objective_count)
    objective_weights = np.asarray(objective_weights, dtype=np.float64)
    if objective_weights.shape != (instance.objective_count,):
        raise ValueError("objective weight length must match objective count")

    item_score = objective_weights @ instance.profits
    # Bit m-1-i of the subset index holds x_i, so ascending index order is
    # lexicographic order on bit vectors and the first strict maximum wins.
    shifts = np.arange(m - 1, -1, -1, dtype=np.int64)
    best_score = -1.0
    best_bits = None
    for start in range(0, 1 << m, _ENUM_CHUNK):
        ks = np.arange(start, min(start + _ENUM_CHUNK, 1 << m), dtype=np.int64)
        bits = ((ks[:, None] >> shifts) & 1).astype(np.float64)
        cover = bits @ instance.membership
        union_weights = (cover > 0.0) @ instance.weights
        scores = bits @ item_score
        scores[union_weights > instance.capacity] = -1.0
        pick = int(np.argmax(scores))
        if scores[pick] > best_score:
            best_score = scores[pick]
            best_bits = bits[pick].copy()
    return best_bits, evaluate(instance, best_bits)


def generate_instance(
    rng: np.random.Generator,
    item_count: int,
    element_count: int,
    objective_count: int = 1,
    density: float = 0.3,
    capacity_ratio: float = 0.75,
) -> SukpInstance:
    """Draw a random instance; fully determined by the generator state.

    Membership bits are set independently with probability ``density``
    (empty rows get one forced bit); profits and weights are integers in
    [1, 100]; the capacity is ``capacity_ratio`` times the total element
    weight.
    """
    if not 0.0 < density <= 1.0:
        raise ValueError("density must be in (0, 1]")
    if not 0.0 < capacity_ratio <= 1.0:
        raise ValueError("capacity_ratio must be in (0, 1]")
    if item_count < 1 or element_count < 1 or objective_count < 1:
        raise ValueError("instance dimensions must be positive")
    profits = rng.integers(1, 101, size=(objective_count, item_count)).astype(np.float64)
    weights = rng.integers(1, 101, size=element_count).astype(np.float64)
    membership = (rng.random((item_count, element_count)) < density).astype(np.float64)
    for row in np.flatnonzero(membership.sum(axis=1) == 0):
        membership[row, int(rng.integers(element_count))] = 1.0
    return SukpInstance(
        profits=profits, weights=weights, membership=membership,
        capacity=capacity_ratio * float(weights.sum()),
    )


def replicate_objectives(instance: SukpInstance, objective_count: int) -> SukpInstance:
    """Multi-objective variant of an instance: the profit vector repeated per
    objective under the shared capacity constraint."""
    if objective_count < 1:
        raise ValueError("objective count must be positive")
    return SukpInstance(
        profits=np.tile(instance.profits[:1], (objective_count, 1)),
        weights=instance.weights, membership=instance.membership,
        capacity=instance.capacity,
    )


def random_feasible(
    instance: SukpInstance, rng: np.random.Generator
) -> tuple[np.ndarray, Evaluation]:
    """Uniform random bit vector pushed through repair, with its evaluation."""
    bits = rng.integers(0, 2, size=instance.item_count).astype(np.float64)
    return repair_and_evaluate(instance, bits)
