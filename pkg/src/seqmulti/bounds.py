"""Closed-form thresholds, familywise-error bounds and sample-size bounds.

Everything here is deterministic arithmetic on the KL numbers of a panel.
Raw bound functions may exceed 1; the ``fwe_*`` functions cap at 1 unless
``capped=False``.
"""

from __future__ import annotations

import itertools
import math
from collections.abc import Iterator
from dataclasses import dataclass

from .exceptions import EnumerationLimitError
from .models import Panel, signal_set
from .validation import check_count, check_probability


@dataclass(frozen=True)
class Exact:
    """Exactly ``m`` signals."""

    m: int

    def validate(self, K):
        check_count("m", self.m, 1, K - 1)
        return self

    def contains(self, A) -> bool:
        return len(A) == self.m

    def sizes(self, K) -> range:
        return range(self.m, self.m + 1)

    def size(self, K) -> int:
        return math.comb(K, self.m)

    def members(self, K) -> Iterator[frozenset]:
        for combo in itertools.combinations(range(K), self.m):
            yield frozenset(combo)


@dataclass(frozen=True)
class Bounded:
    """Between ``l`` and ``u`` signals; Bounded(0, K) is no prior knowledge."""

    l: int
    u: int

    def validate(self, K):
        check_count("l", self.l, 0, K - 1)
        check_count("u", self.u, self.l + 1, K)
        return self

    def contains(self, A) -> bool:
        return self.l <= len(A) <= self.u

    def sizes(self, K) -> range:
        return range(self.l, self.u + 1)

    def size(self, K) -> int:
        return sum(math.comb(K, s) for s in self.sizes(K))

    def members(self, K) -> Iterator[frozenset]:
        for s in self.sizes(K):
            for combo in itertools.combinations(range(K), s):
                yield frozenset(combo)


PriorClass = Exact | Bounded


@dataclass(frozen=True)
class ErrorSpec:
    alpha: float
    beta: float

    def __post_init__(self):
        check_probability("alpha", self.alpha)
        check_probability("beta", self.beta)

    @property
    def smaller(self) -> float:
        return min(self.alpha, self.beta)

    def require_lower_bound_domain(self):
        if self.alpha + self.beta >= 1:
            raise ValueError("lower bounds need alpha + beta < 1")
        return self


@dataclass(frozen=True)
class KlSummary:
    """Smallest D0 over noise streams and smallest D1 over signal streams;
    an empty minimum is +inf."""

    eta0: float
    eta1: float

    @classmethod
    def of(cls, panel: Panel, A) -> "KlSummary":
        A = signal_set(A, panel.K)
        kl = panel.kl_matrix()
        eta0 = min((kl[j, 0] for j in range(panel.K) if j not in A), default=math.inf)
        eta1 = min((kl[k, 1] for k in A), default=math.inf)
        return cls(float(eta0), float(eta1))


# -- error control ------------------------------------------------------------


def conservative_threshold_gap(K: int, m: int, spec: ErrorSpec) -> float:
    check_count("m", m, 1, K - 1)
    return abs(math.log(spec.smaller)) + math.log(m * (K - m))


def fwe_bound_gap(K: int, m: int, c: float, capped: bool = True) -> float:
    if c <= 0:
        raise ValueError("c must be positive")
    check_count("m", m, 1, K - 1)
    bound = m * (K - m) * math.exp(-c)
    return min(bound, 1.0) if capped else bound


def conservative_thresholds_gi(K: int, l: int, u: int, spec: ErrorSpec):
    """(a, b, c, d) guaranteeing (alpha, beta) for the gap-intersection rule;
    with l=0, u=K the pair (a, b) is the intersection-rule choice."""
    Bounded(l, u).validate(K)
    la, lb = abs(math.log(spec.alpha)), abs(math.log(spec.beta))
    a = lb + math.log(K)
    b = la + math.log(K)
    c = la + math.log((K - l) * K)
    d = lb + math.log(u * K)
    return a, b, c, d


def fwe_bounds_gi(K: int, size_a: int, a, b, c, d, capped: bool = True):
    """(type I, type II) bounds for a signal set of size ``size_a``."""
    check_count("size_a", size_a, 0, K)
    noise = K - size_a
    type1 = noise * (math.exp(-b) + size_a * math.exp(-c))
    type2 = size_a * (math.exp(-a) + noise * math.exp(-d))
    if capped:
        return min(type1, 1.0), min(type2, 1.0)
    return type1, type2


# -- lower bound machinery ----------------------------------------------------


def phi(x: float, y: float) -> float:
    if not (0 < x < 1 and 0 < y < 1):
        raise ValueError(f"phi is defined on (0,1)^2, got ({x}, {y})")
    return x * math.log(x / (1 - y)) + (1 - x) * math.log((1 - x) / y)


def gamma(A, C, spec: ErrorSpec) -> float:
    A, C = frozenset(A), frozenset(C)
    if A == C:
        raise ValueError("gamma needs two different configurations")
    extra, missing = bool(C - A), bool(A - C)
    if extra and not missing:
        return phi(spec.alpha, spec.beta)
    if missing and not extra:
        return phi(spec.beta, spec.alpha)
    return max(phi(spec.alpha, spec.beta), phi(spec.beta, spec.alpha))


def _ratio(A, C, kl, spec):
    drift = sum(kl[k, 1] for k in A - C) + sum(kl[j, 0] for j in C - A)
    return gamma(A, C, spec) / drift


def _neighbours(A, K):
    """Single additions, removals and swaps of A."""
    outside = [j for j in range(K) if j not in A]
    for j in outside:
        yield A | {j}
    for k in A:
        yield A - {k}
    for k in A:
        for j in outside:
            yield (A - {k}) | {j}


def ess_lower_bound(panel: Panel, A, prior: PriorClass, spec: ErrorSpec,
                    exhaustive: bool = False, max_members: int = 1 << 16) -> float:
    """Largest gamma/drift ratio over alternative configurations in the class.

    By default only single additions, removals and swaps of A are scanned;
    pass ``exhaustive=True`` to enumerate the whole class instead.
    """
    spec.require_lower_bound_domain()
    K = panel.K
    prior.validate(K)
    A = signal_set(A, K)
    if not prior.contains(A):
        raise ValueError(f"signal set of size {len(A)} is not in {prior}")
    kl = panel.kl_matrix()
    if exhaustive:
        if prior.size(K) > max_members:
            raise EnumerationLimitError(f"{prior} has {prior.size(K)} members for K={K}")
        candidates = (C for C in prior.members(K) if C != A)
    else:
        candidates = (C for C in _neighbours(A, K) if prior.contains(C))
    best = max((_ratio(A, C, kl, spec) for C in candidates), default=None)
    if best is None:
        raise ValueError(f"{prior} has no configuration other than A")
    return best


def first_order_ess(panel: Panel, A, prior: PriorClass, spec: ErrorSpec) -> float:
    """First-order approximation of the optimal expected sample size."""
    K = panel.K
    prior.validate(K)
    A = signal_set(A, K)
    if not prior.contains(A):
        raise ValueError(f"signal set of size {len(A)} is not in {prior}")
    eta = KlSummary.of(panel, A)
    la, lb = abs(math.log(spec.alpha)), abs(math.log(spec.beta))
    both = eta.eta0 + eta.eta1
    if isinstance(prior, Exact):
        return abs(math.log(spec.smaller)) / both
    size = len(A)
    if size == prior.l:
        return max(lb / eta.eta0, la / both)
    if size == prior.u:
        return max(la / eta.eta1, lb / both)
    return max(lb / eta.eta0, la / eta.eta1)
