"""Binary move operators and the configurable operator pool.

Operators map a solution to a nearby candidate, optionally mixing in bits
from the run's best solution or a donor population member. The default
pool spans a one-bit local move, a k-bit jump, best-solution mixing, and a
cardinality-preserving exchange. Pools are configured by name list, e.g.
``["flip1", "flipk:3", "bestmix:0.3", "exchange"]``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

DEFAULT_POOL = ("flip1", "flipk:3", "bestmix:0.3", "exchange")


@dataclass(frozen=True)
class MoveContext:
    """Solutions an operator may draw bits from. All must share one length."""

    current: np.ndarray
    global_best: np.ndarray
    donor: np.ndarray

    def __post_init__(self):
        if not (len(self.current) == len(self.global_best) == len(self.donor)):
            raise ValueError("context solutions must have equal length")


def _flip_one(bits: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    out = bits.copy()
    i = int(rng.integers(out.shape[0]))
    out[i] = 1.0 - out[i]
    return out


class OperatorPool:
    """An ordered, non-empty pool of named move operators."""

    def __init__(self, names=DEFAULT_POOL):
        names = list(names)
        if not names:
            raise ValueError("operator pool must not be empty")
        self.names = tuple(names)
        self._specs = [self._parse(name) for name in names]

    @staticmethod
    def _parse(name: str):
        kind, _, arg = name.partition(":")
        if kind == "flip1":
            return kind, None
        if kind == "flipk":
            k = int(arg) if arg else 3
            if k < 1:
                raise ValueError(f"flipk needs a positive bit count, got {name!r}")
            return kind, k
        if kind in ("bestmix", "donormix"):
            p = float(arg) if arg else 0.3
            if not 0.0 <= p <= 1.0:
                raise ValueError(f"{kind} probability must be in [0, 1], got {name!r}")
            return kind, p
        if kind == "exchange":
            return kind, None
        raise ValueError(
            f"unknown operator {name!r}; known: flip1, flipk:K, bestmix:P, donormix:P, exchange"
        )

    def __len__(self) -> int:
        return len(self._specs)

    def apply(self, index: int, ctx: MoveContext, rng: np.random.Generator) -> np.ndarray:
        """Produce a candidate from ctx.current. Deterministic in the rng state."""
        if not 0 <= index < len(self._specs):
            raise ValueError(f"operator index {index} outside pool of size {len(self)}")
        kind, arg = self._specs[index]
        bits = ctx.current
        m = bits.shape[0]
        if kind == "flip1":
            return _flip_one(bits, rng)
        if kind == "flipk":
            out = bits.copy()
            count = min(arg, m)
            chosen: list[int] = []
            while len(chosen) < count:
                i = int(rng.integers(m))
                if i not in chosen:
                    chosen.append(i)
                    out[i] = 1.0 - out[i]
            return out
        if kind == "bestmix":
            take = rng.random(m) < arg
            return np.where(take, ctx.global_best, bits)
        if kind == "donormix":
            take = rng.random(m) < arg
            return np.where(take, ctx.donor, bits)
        # exchange: move one set bit onto one unset position, keeping the
        # cardinality; degrades to a one-bit flip when no pair exists.
        ones = np.flatnonzero(bits == 1.0)
        zeros = np.flatnonzero(bits == 0.0)
        if ones.shape[0] == 0 or zeros.shape[0] == 0:
            return _flip_one(bits, rng)
        out = bits.copy()
        out[ones[int(rng.integers(ones.shape[0]))]] = 0.0
        out[zeros[int(rng.integers(zeros.shape[0]))]] = 1.0
        return out


def default_pool() -> OperatorPool:
    return OperatorPool(DEFAULT_POOL)
