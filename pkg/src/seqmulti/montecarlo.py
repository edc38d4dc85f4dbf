"""Plain Monte Carlo summaries and threshold calibration."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

from sklearn.base import BaseEstimator, MetaEstimatorMixin, clone

from .bounds import ErrorSpec
from .exceptions import CalibrationError, EnumerationLimitError
from .importance import is_estimate_fwe
from .models import Panel
from .procedures import GapRule, SequentialRule
from .simulation import DEFAULT_HORIZON, TYPE_I, Estimate, check_error_type, simulate
from .validation import check_reps

log = logging.getLogger(__name__)

ENUMERATION_CAP = 1024


def estimate_ess(rule: SequentialRule, panel: Panel, A, reps: int = 100_000,
                 seed: int = 0, horizon: int = DEFAULT_HORIZON) -> Estimate:
    """Mean stopping time under P_A with its standard error."""
    batch = simulate(rule, panel, A, check_reps(reps), seed, horizon)
    return Estimate.from_samples(batch.stopping_time, int(batch.horizon_hits.sum()))


def mc_estimate_fwe(rule: SequentialRule, panel: Panel, A, error_type: str = TYPE_I,
                    reps: int = 100_000, seed: int = 0,
                    horizon: int = DEFAULT_HORIZON) -> Estimate:
    """Plain Monte Carlo frequency of the familywise error under P_A."""
    check_error_type(error_type)
    batch = simulate(rule, panel, A, check_reps(reps), seed, horizon)
    return Estimate.from_samples(batch.errors(error_type).astype(float),
                                 int(batch.horizon_hits.sum()))


def representatives(panel: Panel, prior, cap: int = ENUMERATION_CAP):
    """Signal sets to scan for a worst case: one per size when the streams are
    exchangeable, otherwise every member of the class."""
    K = panel.K
    prior.validate(K)
    if panel.exchangeable:
        return [frozenset(range(s)) for s in prior.sizes(K)]
    if prior.size(K) > cap:
        raise EnumerationLimitError(
            f"{prior} has {prior.size(K)} members for a non-exchangeable panel; "
            "pass an explicit list of signal sets"
        )
    return list(prior.members(K))


def max_fwe_over_class(rule: SequentialRule, panel: Panel, prior=None,
                       error_type: str = TYPE_I, reps: int = 100_000, seed: int = 0,
                       horizon: int = DEFAULT_HORIZON, candidates=None):
    """(worst A, its IS estimate) over the prior class."""
    prior = prior if prior is not None else rule.natural_prior(panel.K)
    if candidates is None:
        candidates = representatives(panel, prior)
    worst = None
    for A in candidates:
        est = is_estimate_fwe(rule, panel, A, error_type, reps, seed, horizon)
        log.debug("A=%s error=%.4g (%.2g)", sorted(A), est.value, est.std_error)
        if worst is None or est.value > worst[1].value:
            worst = (frozenset(A), est)
    return worst


@dataclass
class CalibrationResult:
    rule: SequentialRule
    scalar: float
    achieved_error: Estimate
    worst_A: frozenset
    iterations: int
    bracket: tuple
    history: list = field(default_factory=list)

    @property
    def thresholds(self) -> dict:
        return {k: v for k, v in self.rule.get_params().items() if k in "abcd"}


def calibrate(rule: SequentialRule, panel: Panel, target: ErrorSpec, prior=None,
              tol: float = 0.05, reps: int = 100_000, seed: int = 0,
              horizon: int = DEFAULT_HORIZON, min_width: float = 0.01,
              max_iter: int = 60, error_type: str = TYPE_I,
              candidates=None) -> CalibrationResult:
    """Tune the rule's scalar threshold so the worst-case IS error hits the target.

    The gap rule moves ``c`` and aims at min(alpha, beta).  The other rules
    move ``b`` (``a``, ``c``, ``d`` tied to it) and aim at alpha with the
    type-I error.  Every evaluation reuses ``seed``, so successive estimates
    share their random numbers.  The bracket starts at the conservative
    threshold and is extended downward by doubling steps; inside it the
    next point is the log-error interpolant, safeguarded towards the midpoint.
    ``candidates`` restricts the worst-case scan to the given signal sets.
    """
    K = panel.K
    prior = prior if prior is not None else rule.natural_prior(K)
    prior.validate(K)
    goal = target.smaller if isinstance(rule, GapRule) else target.alpha
    if candidates is None:
        candidates = representatives(panel, prior)
    history = []

    def evaluate(s):
        trial = rule.with_scalar(s, K, target.alpha, target.beta)
        worst_A, est = max_fwe_over_class(trial, panel, prior, error_type, reps, seed,
                                          horizon, candidates)
        history.append((s, est.value, est.std_error))
        log.info("scalar=%.6f error=%.4g target=%.4g", s, est.value, goal)
        return trial, worst_A, est

    def close(est):
        return abs(est.value - goal) <= tol * goal

    hi = rule.conservative(K, target.alpha, target.beta).scalar
    hi_eval = evaluate(hi)
    grow = 1.0
    while hi_eval[2].value > goal and not close(hi_eval[2]):
        hi += grow
        grow *= 2
        if len(history) > max_iter:
            raise CalibrationError(f"error stays above target up to {hi}: {history}")
        hi_eval = evaluate(hi)
    if close(hi_eval[2]):
        return _result(hi_eval, hi, (hi, hi), history)

    step = 1.0
    lo = hi
    while True:
        lo = max(hi - step, 1e-3 * hi) if step < hi else 1e-3 * hi
        lo_eval = evaluate(lo)
        if close(lo_eval[2]):
            return _result(lo_eval, lo, (lo, hi), history)
        if lo_eval[2].value > goal:
            break
        if lo <= 1e-3 * hi or len(history) > max_iter:
            raise CalibrationError(
                f"could not find a threshold with error above {goal:.3g}; history {history}"
            )
        hi, hi_eval = lo, lo_eval
        step *= 2

    for _ in range(max_iter):
        if hi - lo < min_width:
            break
        mid = _split(lo, lo_eval[2].value, hi, hi_eval[2].value, goal)
        mid_eval = evaluate(mid)
        if close(mid_eval[2]):
            return _result(mid_eval, mid, (lo, hi), history)
        if mid_eval[2].value > goal:
            lo, lo_eval = mid, mid_eval
        else:
            hi, hi_eval = mid, mid_eval
    else:
        raise CalibrationError(f"no convergence after {max_iter} iterations: {history}")
    best = min((lo_eval, lo), (hi_eval, hi), key=lambda e: abs(e[0][2].value - goal))
    return _result(best[0], best[1], (lo, hi), history)


def _split(lo, err_lo, hi, err_hi, goal):
    mid = 0.5 * (lo + hi)
    if err_hi <= 0 or err_lo <= 0:
        return mid
    t = (math.log(err_lo) - math.log(goal)) / (math.log(err_lo) - math.log(err_hi))
    guess = lo + t * (hi - lo)
    # keep away from the ends so the bracket always shrinks by a fixed fraction
    width = hi - lo
    return min(max(guess, lo + 0.1 * width), hi - 0.1 * width)


def _result(evaluation, scalar, bracket, history):
    rule, worst_A, est = evaluation
    return CalibrationResult(rule, float(scalar), est, worst_A, len(history),
                             tuple(float(x) for x in bracket), list(history))


class ThresholdCalibrator(MetaEstimatorMixin, BaseEstimator):
    """Meta-estimator: ``fit(panel)`` stores the calibrated copy of ``rule``
    in ``rule_`` and the search record in ``result_``."""

    def __init__(self, rule=None, alpha=1e-2, beta=1e-2, prior=None, tol=0.05,
                 reps=100_000, seed=0, horizon=DEFAULT_HORIZON):
        self.rule = rule
        self.alpha = alpha
        self.beta = beta
        self.prior = prior
        self.tol = tol
        self.reps = reps
        self.seed = seed
        self.horizon = horizon

    def fit(self, X, y=None):
        if not isinstance(X, Panel):
            raise TypeError("ThresholdCalibrator.fit expects a Panel")
        rule = clone(self.rule) if self.rule is not None else GapRule()
        self.result_ = calibrate(rule, X, ErrorSpec(self.alpha, self.beta), self.prior,
                                 self.tol, self.reps, self.seed, self.horizon)
        self.rule_ = self.result_.rule.fit(X)
        self.n_streams_ = X.K
        return self

    def predict(self, X):
        return self.rule_.predict(X)

