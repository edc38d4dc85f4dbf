"""The four sequential multiple-testing rules.

Each rule is a scikit-learn style estimator: thresholds are constructor
parameters (so ``get_params``/``set_params``/``clone`` work), ``fit`` checks
them against the number of streams, and ``run``/``predict`` apply the rule to
a (K, n_obs) matrix of LLR increments, one row per stream.

Stream ids are 0-based; ranks of ordered statistics are 1-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from . import _kernels
from .llr import LlrState
from .models import Panel, signal_set
from .rng import KeyedRng
from .validation import (
    check_count,
    check_horizon,
    check_increments,
    check_positive,
    n_streams_of,
)

STOP_TAGS = {
    _kernels.BY_GAP: "gap",
    _kernels.BY_TAU1: "tau1",
    _kernels.BY_TAU2: "tau2",
    _kernels.BY_TAU3: "tau3",
    _kernels.BY_INTERSECTION: "intersection",
    _kernels.BY_INCOMPLETE: "incomplete",
    _kernels.BY_HORIZON: "horizon",
}


@dataclass(frozen=True)
class TrialOutcome:
    stopping_time: int
    decision: frozenset
    stopped_by: str
    final_state: LlrState
    exit_times: tuple | None = None
    component: frozenset | None = None

    @property
    def hit_horizon(self) -> bool:
        return self.stopped_by == "horizon"


# -- stopping criteria and decisions on a single state ------------------------


def gap_should_stop(state: LlrState, m: int, c: float) -> bool:
    return state.ordered_value(m) - state.ordered_value(m + 1) >= c


def gap_decide(state: LlrState, m: int) -> frozenset:
    return state.top(m)


def gi_should_stop(state: LlrState, l: int, u: int, a, b, c, d):
    """(stop?, which) for the gap-intersection rule; ``which`` is the
    lowest-numbered satisfied criterion among tau1, tau2, tau3."""
    low = state.ordered_value(l + 1)
    if low <= -a and state.ordered_value(l) - low >= c:
        return True, "tau1"
    p = state.positive_count
    if l <= p <= u and _all_outside(state, a, b):
        return True, "tau2"
    high = state.ordered_value(u)
    if high >= b and high - state.ordered_value(u + 1) >= d:
        return True, "tau3"
    return False, None


def gi_decide(state: LlrState, l: int, u: int) -> frozenset:
    return state.top(min(max(state.positive_count, l), u))


def intersection_should_stop(state: LlrState, a, b) -> bool:
    return _all_outside(state, a, b)


def intersection_decide(state: LlrState) -> frozenset:
    return state.top(state.positive_count)


def _all_outside(state, a, b):
    lam = state.lam
    return bool(np.all((lam <= -a) | (lam >= b)))


# -- estimators ---------------------------------------------------------------


class SequentialRule(BaseEstimator):
    """Shared machinery; subclasses define the criterion and decision."""

    kind: int
    scalar_name = "b"

    def fit(self, X, y=None):
        """Check the thresholds against K, taken from a Panel, an int, or a
        (K, n_obs) increment matrix."""
        K = n_streams_of(X)
        self._validate(K)
        self.n_streams_ = K
        return self

    def _validate(self, K):
        if K < 1:
            raise ValueError("need at least one stream")

    def _checked(self, K):
        self._validate(K)
        return self

    def stop_reason(self, state: LlrState) -> str | None:
        raise NotImplementedError

    def should_stop(self, state: LlrState) -> bool:
        return self.stop_reason(state) is not None

    def decide(self, state: LlrState) -> frozenset:
        raise NotImplementedError

    def run(self, X) -> TrialOutcome:
        """Apply the rule to one path of increments; flags ``horizon`` when
        the path ends before the rule stops."""
        X = check_increments(X)
        self._validate(X.shape[0])
        walker = _Walker(self, X.shape[0])
        for n in range(X.shape[1]):
            if walker.step(X[:, n]):
                break
        return walker.outcome()

    def predict(self, X) -> np.ndarray:
        """0/1 signal indicator per stream (row of ``X``)."""
        check_is_fitted(self, "n_streams_")
        X = check_increments(X, self.n_streams_)
        out = np.zeros(X.shape[0], dtype=int)
        out[list(self.run(X).decision)] = 1
        return out

    def natural_prior(self, K):
        from .bounds import Bounded

        return Bounded(0, K)

    def kernel_params(self):
        raise NotImplementedError

    def conservative(self, K, alpha, beta):
        """Copy with the closed-form thresholds guaranteeing (alpha, beta)."""
        raise NotImplementedError

    def with_scalar(self, value, K, alpha, beta):
        """Copy whose thresholds are tied to the single calibration scalar."""
        raise NotImplementedError

    @property
    def scalar(self):
        return getattr(self, self.scalar_name)


class GapRule(SequentialRule):
    """Stop when the m-th and (m+1)-th largest LLRs are at least ``c`` apart
    and declare the top m streams."""

    kind = _kernels.KIND_GAP
    scalar_name = "c"

    def __init__(self, m=1, c=10.0):
        self.m = m
        self.c = c

    def _validate(self, K):
        check_count("m", self.m, 1, K - 1)
        check_positive("c", self.c)

    def stop_reason(self, state):
        return "gap" if gap_should_stop(state, self.m, self.c) else None

    def decide(self, state):
        return gap_decide(state, self.m)

    def natural_prior(self, K):
        from .bounds import Exact

        return Exact(self.m)

    def kernel_params(self):
        return np.array([0.0, 0.0, self.c, 0.0]), np.array([self.m, 0], dtype=np.int64)

    def conservative(self, K, alpha, beta):
        from .bounds import ErrorSpec, conservative_threshold_gap

        c = conservative_threshold_gap(K, self.m, ErrorSpec(alpha, beta))
        return GapRule(self.m, c)

    def with_scalar(self, value, K, alpha, beta):
        return GapRule(self.m, float(value))


class GapIntersectionRule(SequentialRule):
    """Earliest of tau1 (exactly l signals), tau2 (intersection with
    l <= p(n) <= u) and tau3 (exactly u signals); declares the top p'
    streams with p' the positive count clamped to [l, u]."""

    kind = _kernels.KIND_GI

    def __init__(self, l=0, u=1, a=10.0, b=10.0, c=10.0, d=10.0):
        self.l = l
        self.u = u
        self.a = a
        self.b = b
        self.c = c
        self.d = d

    def _validate(self, K):
        check_count("l", self.l, 0, K - 1)
        check_count("u", self.u, self.l + 1, K)
        for name in "abcd":
            check_positive(name, getattr(self, name))

    def stop_reason(self, state):
        return gi_should_stop(state, self.l, self.u, self.a, self.b, self.c, self.d)[1]

    def decide(self, state):
        return gi_decide(state, self.l, self.u)

    def natural_prior(self, K):
        from .bounds import Bounded

        return Bounded(self.l, self.u)

    def kernel_params(self):
        return (
            np.array([self.a, self.b, self.c, self.d], dtype=float),
            np.array([self.l, self.u], dtype=np.int64),
        )

    def conservative(self, K, alpha, beta):
        from .bounds import ErrorSpec, conservative_thresholds_gi

        a, b, c, d = conservative_thresholds_gi(K, self.l, self.u, ErrorSpec(alpha, beta))
        return GapIntersectionRule(self.l, self.u, a, b, c, d)

    def with_scalar(self, value, K, alpha, beta):
        b = float(value)
        a = b * abs(math.log(beta)) / abs(math.log(alpha))
        return GapIntersectionRule(
            self.l, self.u, a, b, b + math.log(K - self.l), a + math.log(self.u)
        )


class _ExitRule(SequentialRule):
    def __init__(self, a=10.0, b=10.0):
        self.a = a
        self.b = b

    def _validate(self, K):
        check_positive("a", self.a)
        check_positive("b", self.b)

    def kernel_params(self):
        return np.array([self.a, self.b, 0.0, 0.0]), np.array([0, 0], dtype=np.int64)

    def conservative(self, K, alpha, beta):
        from .bounds import ErrorSpec, conservative_thresholds_gi

        a, b, _, _ = conservative_thresholds_gi(K, 0, K, ErrorSpec(alpha, beta))
        return type(self)(a, b)

    def with_scalar(self, value, K, alpha, beta):
        b = float(value)
        return type(self)(b * abs(math.log(beta)) / abs(math.log(alpha)), b)


class IntersectionRule(_ExitRule):
    """Stop once every LLR is outside (-a, b); declare the positive ones."""

    kind = _kernels.KIND_INTERSECTION

    def stop_reason(self, state):
        return "intersection" if intersection_should_stop(state, self.a, self.b) else None

    def decide(self, state):
        return intersection_decide(state)


class IncompleteRule(_ExitRule):
    """Independent SPRT per stream; stops at the last exit time.

    Each stream's decision and LLR are frozen at its own exit from (-a, b).
    """

    kind = _kernels.KIND_INCOMPLETE

    def stop_reason(self, state):
        return "incomplete" if intersection_should_stop(state, self.a, self.b) else None

    def decide(self, state):
        return intersection_decide(state)


# -- trial runners ------------------------------------------------------------


class _Walker:
    """Advances one path; mirrors the compiled trial loop step for step."""

    def __init__(self, rule, K):
        self.rule = rule
        self.state = LlrState.initial(K)
        self.incomplete = isinstance(rule, IncompleteRule)
        self.exit_times = [None] * K
        self.frozen = np.zeros(K)
        self.stopped_by = None

    def step(self, increments):
        self.state = self.state.update(increments)
        if self.incomplete:
            lam, a, b = self.state.lam, self.rule.a, self.rule.b
            for k in range(lam.size):
                if self.exit_times[k] is None and (lam[k] >= b or lam[k] <= -a):
                    self.exit_times[k] = self.state.time
                    self.frozen[k] = lam[k]
            if all(t is not None for t in self.exit_times):
                self.stopped_by = "incomplete"
        else:
            self.stopped_by = self.rule.stop_reason(self.state)
        return self.stopped_by is not None

    def outcome(self, component=None):
        stopped_by = self.stopped_by or "horizon"
        if self.incomplete:
            lam = np.where(
                [t is None for t in self.exit_times], self.state.lam, self.frozen
            )
            final = LlrState.from_values(lam, self.state.time)
            decision = frozenset(int(k) for k in np.flatnonzero(lam > 0))
            exit_times = tuple(self.exit_times)
        else:
            final = self.state
            decision = self.rule.decide(self.state)
            exit_times = None
        return TrialOutcome(
            stopping_time=self.state.time,
            decision=decision,
            stopped_by=stopped_by,
            final_state=final,
            exit_times=exit_times,
            component=component,
        )


def run_procedure(panel: Panel, A, rule: SequentialRule, seed: int, horizon: int,
                  rep: int = 0, proposal=None) -> TrialOutcome:
    """Simulate one trial under P_A (or under ``proposal`` when given).

    A pure function of its arguments: the draws come from the keyed stream
    ``(seed, rep)``, so this reproduces replication ``rep`` of the compiled
    batch simulator exactly.
    """
    horizon = check_horizon(horizon)
    K = panel.K
    rule._checked(K)
    A = signal_set(A, K)
    rng = KeyedRng(seed, rep)
    signal = [k in A for k in range(K)]
    component = None
    if proposal is not None:
        idx = _kernels.pick_component(proposal.cumulative_weights(), rng.uniform())
        component = proposal.configs[idx]
        signal = [k in component for k in range(K)]
    walker = _Walker(rule, K)
    inc = np.empty(K)
    for _ in range(horizon):
        for k, model in enumerate(panel.streams):
            inc[k] = model.sample_increment(int(signal[k]), rng)
        if walker.step(inc):
            break
    return walker.outcome(component)


def incomplete_run(panel: Panel, A, a, b, seed: int, horizon: int, rep: int = 0) -> TrialOutcome:
    return run_procedure(panel, A, IncompleteRule(a, b), seed, horizon, rep)
