"""Pareto dominance and a bounded non-dominated archive.

Maximization convention throughout: ``a`` dominates ``b`` when it is at
least as good everywhere and strictly better somewhere.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


def dominates(a, b) -> bool:
    if len(a) != len(b):
        raise ValueError("objective vectors must have equal length")
    not_worse = all(x >= y for x, y in zip(a, b))
    return not_worse and any(x > y for x, y in zip(a, b))


@dataclass(frozen=True)
class ArchiveEntry:
    solution: tuple[int, ...]
    objectives: tuple[float, ...]


class ParetoArchive:
    """Mutually non-dominated objective vectors with optional capacity.

    A candidate is rejected when some entry dominates or equals it;
    otherwise it displaces every entry it dominates. When the capacity is
    exceeded, the entry in the most crowded region (smallest
    nearest-neighbor distance in min-max normalized objective space) is
    evicted.
    """

    def __init__(self, capacity: int | None = 100):
        if capacity is not None and capacity < 1:
            raise ValueError("archive capacity must be positive")
        self.capacity = capacity
        self.entries: list[ArchiveEntry] = []

    def __len__(self) -> int:
        return len(self.entries)

    def __iter__(self):
        return iter(self.entries)

    def objective_vectors(self) -> list[tuple[float, ...]]:
        return [entry.objectives for entry in self.entries]

    def insert(self, solution, objectives) -> bool:
        if isinstance(objectives, np.ndarray):
            objectives = tuple(objectives.tolist())
        else:
            objectives = tuple(float(v) for v in objectives)
        # An entry at least as good everywhere either equals or dominates
        # the candidate; both reject it.
        for entry in self.entries:
            if all(have >= want for have, want in zip(entry.objectives, objectives)):
                return False
        # No survivor equals the candidate, so componentwise >= is dominance.
        kept = [
            e for e in self.entries
            if not all(c >= v for c, v in zip(objectives, e.objectives))
        ]
        kept.append(ArchiveEntry(tuple(int(v) for v in solution), objectives))
        self.entries = kept
        if self.capacity is not None and len(self.entries) > self.capacity:
            self._evict_most_crowded()
        return True

    def _evict_most_crowded(self) -> None:
        points = np.asarray([e.objectives for e in self.entries], dtype=np.float64)
        lo = points.min(axis=0)
        span = points.max(axis=0) - lo
        span[span == 0.0] = 1.0
        normalized = (points - lo) / span
        delta = normalized[:, None, :] - normalized[None, :, :]
        distance = np.sqrt((delta * delta).sum(axis=2))
        np.fill_diagonal(distance, np.inf)
        crowded = int(np.argmin(distance.min(axis=1)))
        del self.entries[crowded]

    def write_csv(self, path) -> None:
        """One row per entry: the solution bit string, then the objectives."""
        n_obj = len(self.entries[0].objectives) if self.entries else 1
        with open(path, "w", newline="") as handle:
            writer = csv.writer(handle)
            writer.writerow(["solution"] + [f"f{j + 1}" for j in range(n_obj)])
            for entry in self.entries:
                bits = "".join(str(b) for b in entry.solution)
                writer.writerow([bits] + [repr(v) for v in entry.objectives])
