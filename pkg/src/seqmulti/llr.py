"""Running LLR vector with its descending order and positive count."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import NonFiniteIncrementError


@dataclass(frozen=True)
class LlrState:
    """State of all K cumulative LLRs at time ``time``.

    ``order`` lists stream ids by decreasing LLR; equal values keep the
    smaller stream id first.  Instances are immutable; ``update`` returns a
    new state.
    """

    time: int
    lam: np.ndarray
    order: np.ndarray
    positive_count: int

    @classmethod
    def initial(cls, K: int) -> "LlrState":
        if K < 1:
            raise ValueError("K must be positive")
        lam = np.zeros(K)
        lam.setflags(write=False)
        order = np.arange(K)
        order.setflags(write=False)
        return cls(0, lam, order, 0)

    @classmethod
    def from_values(cls, lam, time: int = 0) -> "LlrState":
        lam = np.array(lam, dtype=float)
        if lam.ndim != 1 or not np.all(np.isfinite(lam)):
            raise ValueError("lam must be a finite 1-d vector")
        order = np.argsort(-lam, kind="stable")
        lam.setflags(write=False)
        order.setflags(write=False)
        return cls(int(time), lam, order, int(np.count_nonzero(lam > 0)))

    @property
    def K(self) -> int:
        return self.lam.size

    def update(self, increments) -> "LlrState":
        inc = np.asarray(increments, dtype=float)
        if inc.shape != self.lam.shape:
            raise ValueError(f"expected {self.K} increments, got shape {inc.shape}")
        if not np.all(np.isfinite(inc)):
            raise NonFiniteIncrementError(f"non-finite increment at time {self.time + 1}: {inc}")
        return LlrState.from_values(self.lam + inc, self.time + 1)

    def ordered_value(self, rank: int) -> float:
        """k-th largest LLR for rank 1..K; -inf at rank 0 and +inf at K+1."""
        rank = self._check_rank(rank)
        if rank == 0:
            return -math.inf
        if rank == self.K + 1:
            return math.inf
        return float(self.lam[self.order[rank - 1]])

    def ordered_index(self, rank: int) -> int:
        rank = self._check_rank(rank)
        if rank == 0 or rank == self.K + 1:
            raise ValueError("sentinel ranks have no stream index")
        return int(self.order[rank - 1])

    def top(self, count: int) -> frozenset:
        return frozenset(int(k) for k in self.order[:count])

    def _check_rank(self, rank):
        rank = int(rank)
        if not 0 <= rank <= self.K + 1:
            raise ValueError(f"rank must be in [0, {self.K + 1}], got {rank}")
        return rank


def pairwise_llr(state: LlrState, A, C) -> float:
    """log dP_A/dP_C at the state's time."""
    A, C = frozenset(A), frozenset(C)
    if A == C:
        raise ValueError("pairwise LLR needs two different configurations")
    lam = state.lam
    return float(sum(lam[k] for k in A - C) - sum(lam[k] for k in C - A))
