"""Familywise error probabilities by change of measure.

Trials are drawn from a mixture of product measures P_C under which the error
event is likely, and each erroneous trial is weighted by the inverse of the
mixture likelihood ratio against the true P_A at stopping.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import ImpossibleErrorEvent
from .llr import LlrState
from .models import Panel, signal_set
from .procedures import GapIntersectionRule, GapRule, SequentialRule
from .simulation import DEFAULT_HORIZON, TYPE_I, Estimate, check_error_type, simulate
from .validation import check_reps


@dataclass(frozen=True)
class Proposal:
    """Finite mixture of product measures P_C."""

    weights: np.ndarray
    configs: tuple

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=float)
        if len(self.configs) == 0:
            raise ValueError("proposal needs at least one component")
        if w.shape != (len(self.configs),) or np.any(w <= 0):
            raise ValueError("weights must be positive, one per component")
        if abs(math.fsum(w) - 1.0) > 1e-12:
            raise ValueError(f"weights must sum to 1, got {math.fsum(w)!r}")
        if len(set(self.configs)) != len(self.configs):
            raise ValueError("proposal components must be distinct")
        object.__setattr__(self, "weights", w)

    @classmethod
    def uniform(cls, configs) -> "Proposal":
        configs = tuple(frozenset(c) for c in configs)
        return cls(np.full(len(configs), 1.0 / len(configs)), configs)

    @classmethod
    def mixture(cls, parts) -> "Proposal":
        """Combine (weight, Proposal) pairs into one flat mixture."""
        weights, configs = [], []
        for w, prop in parts:
            weights.extend(w * prop.weights)
            configs.extend(prop.configs)
        return cls(np.array(weights), tuple(configs))

    def cumulative_weights(self) -> np.ndarray:
        return np.cumsum(self.weights)

    def masks(self, K) -> np.ndarray:
        out = np.zeros((len(self.configs), K), dtype=bool)
        for i, C in enumerate(self.configs):
            out[i, list(C)] = True
        return out

    def sign_matrix(self, A, K) -> np.ndarray:
        """+1 on C minus A, -1 on A minus C; row c gives log dP_C/dP_A."""
        out = np.zeros((len(self.configs), K))
        for i, C in enumerate(self.configs):
            out[i, list(C - A)] = 1.0
            out[i, list(A - C)] = -1.0
        return out


def _swaps(A, K):
    noise = [j for j in range(K) if j not in A]
    return Proposal.uniform((A - {k}) | {j} for k in sorted(A) for j in noise)


def _additions(A, K):
    noise = [j for j in range(K) if j not in A]
    if not noise:
        raise ImpossibleErrorEvent("no noise stream: a false positive cannot occur")
    return Proposal.uniform(A | {j} for j in noise)


def _removals(A, K):
    if not A:
        raise ImpossibleErrorEvent("no signal stream: a false negative cannot occur")
    return Proposal.uniform(A - {k} for k in sorted(A))


DEFENSIVE_WEIGHT = 0.05


def build_proposal(rule: SequentialRule, A, error_type: str, K: int,
                   defensive: float = 0.0) -> Proposal:
    """Mixture proposal tailored to the rule's error event.

    Gap rule: uniform over swaps A + j - k (both error types).  Otherwise
    uniform over additions A + j for type I and over removals A - k for
    type II; at the boundary sizes of a gap-intersection rule the swap
    mixture gets weight |A|/(1+|A|) and the other part 1/(1+|A|).

    ``defensive`` > 0 mixes in P_A itself with that weight, which caps every
    importance weight at 1/defensive.
    """
    if not 0.0 <= defensive < 1.0:
        raise ValueError(f"defensive weight must be in [0, 1), got {defensive}")
    core = _core_proposal(rule, A, error_type, K)
    if defensive == 0.0:
        return core
    A = signal_set(A, K)
    return Proposal.mixture(
        [(1.0 - defensive, core), (defensive, Proposal.uniform([A]))]
    )


def _core_proposal(rule, A, error_type, K):
    check_error_type(error_type)
    A = signal_set(A, K)
    if isinstance(rule, GapRule):
        if len(A) != rule.m:
            raise ValueError(f"gap rule with m={rule.m} needs |A| = m, got {len(A)}")
        return _swaps(A, K)
    single = _additions(A, K) if error_type == TYPE_I else _removals(A, K)
    if isinstance(rule, GapIntersectionRule):
        size = len(A)
        if not rule.l <= size <= rule.u:
            raise ValueError(f"|A| = {size} outside [{rule.l}, {rule.u}]")
        if size in (rule.l, rule.u) and 0 < size < K:
            return Proposal.mixture(
                [(size / (1 + size), _swaps(A, K)), (1 / (1 + size), single)]
            )
    return single


def log_likelihood_ratio_at_stop(A, proposal: Proposal, final_state: LlrState) -> float:
    A = frozenset(A)
    K = final_state.K
    return float(
        _kernels.log_mixture_lr(
            np.asarray(final_state.lam, dtype=float),
            proposal.sign_matrix(A, K),
            np.log(proposal.weights),
        )
    )


def likelihood_ratio_at_stop(A, proposal: Proposal, final_state: LlrState) -> float:
    """Mixture likelihood ratio of the proposal against P_A (may be inf)."""
    log_lr = log_likelihood_ratio_at_stop(A, proposal, final_state)
    return math.exp(log_lr) if log_lr < 709.0 else math.inf


def is_estimate_fwe(rule: SequentialRule, panel: Panel, A, error_type: str = TYPE_I,
                    reps: int = 100_000, seed: int = 0,
                    horizon: int = DEFAULT_HORIZON,
                    defensive: float = DEFENSIVE_WEIGHT) -> Estimate:
    """Importance-sampling estimate of P_A(type I or type II familywise error).

    An error event that cannot happen (e.g. a false positive when every stream
    is a signal) returns exactly 0.  Trials cut off at the horizon count as
    errors; since their importance weights are otherwise unbounded, a small
    ``defensive`` share of the trials is drawn from P_A itself.
    """
    reps = check_reps(reps)
    K = panel.K
    try:
        proposal = build_proposal(rule, A, error_type, K, defensive)
    except ImpossibleErrorEvent:
        return Estimate(0.0, 0.0, reps, 0)
    batch = simulate(rule, panel, A, reps, seed, horizon, proposal)
    err = batch.errors(error_type)
    weights = np.where(err, np.exp(-batch.log_lr), 0.0)
    return Estimate.from_samples(weights, int(batch.horizon_hits.sum()))
