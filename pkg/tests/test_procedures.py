import math

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from seqmulti import (
    GapIntersectionRule,
    GapRule,
    GaussianMeanShift,
    GenericIncrement,
    IncompleteRule,
    IntersectionRule,
    LlrState,
    Panel,
    build_proposal,
    run_procedure,
    simulate,
)
from seqmulti.importance import log_likelihood_ratio_at_stop
from seqmulti.procedures import (
    STOP_TAGS,
    gap_decide,
    gap_should_stop,
    gi_decide,
    gi_should_stop,
    incomplete_run,
    intersection_decide,
    intersection_should_stop,
)


def state(*values):
    return LlrState.from_values(values, time=1)


# -- stopping criteria on hand-made states ------------------------------------


def test_gap_rule_criterion_and_decision():
    s = state(5.0, -1.0, 0.0)
    assert gap_should_stop(s, 1, 5.0)
    assert not gap_should_stop(s, 1, 5.01)
    assert gap_decide(s, 1) == frozenset({0})
    assert gap_should_stop(s, 2, 1.0) and gap_decide(s, 2) == frozenset({0, 2})


def test_intersection_criterion_and_decision():
    assert intersection_should_stop(state(2.0, -2.0, 3.0), 2.0, 2.0)
    assert not intersection_should_stop(state(2.0, -1.9, 3.0), 2.0, 2.0)
    assert intersection_decide(state(2.0, -2.0, 3.0)) == frozenset({0, 2})


def test_gi_tau1_needs_gap_below_lower_count():
    # l=1: second largest <= -a and gap from the largest >= c
    s = state(1.0, -3.0, -4.0)
    assert gi_should_stop(s, 1, 2, 3.0, 3.0, 4.0, 4.0) == (True, "tau1")
    assert gi_decide(s, 1, 2) == frozenset({0})


def test_gi_tau2_when_all_outside_and_count_in_range():
    s = state(3.0, 3.5, -3.0)
    stop, which = gi_should_stop(s, 1, 2, 3.0, 3.0, 100.0, 100.0)
    assert stop and which == "tau2"
    assert gi_decide(s, 1, 2) == frozenset({0, 1})


def test_gi_tau2_blocked_when_count_outside_range():
    s = state(3.0, 3.5, 4.0)
    assert gi_should_stop(s, 0, 2, 3.0, 3.0, 100.0, 100.0) == (False, None)


def test_gi_tau3_and_clamped_decision():
    # u=1: largest >= b and gap to second >= d; positives = 2 clamp to 1
    s = state(6.0, 0.5, -0.5)
    assert gi_should_stop(s, 0, 1, 3.0, 3.0, 10.0, 5.0) == (True, "tau3")
    assert gi_decide(s, 0, 1) == frozenset({0})


def test_gi_priority_order():
    # both tau1 and tau2 hold: tau1 is reported
    s = state(5.0, -5.0, -6.0)
    assert gi_should_stop(s, 1, 2, 3.0, 3.0, 1.0, 1.0)[1] == "tau1"


def test_gi_sentinels_disable_tau1_and_tau3():
    # with l=0 every stream far below -a is only a tau2 stop
    s = state(-9.0, -9.0)
    assert gi_should_stop(s, 0, 1, 3.0, 3.0, 0.1, 0.1)[1] == "tau2"
    # with u=K every stream far above b is only a tau2 stop
    s = state(9.0, 9.0)
    assert gi_should_stop(s, 1, 2, 3.0, 3.0, 0.1, 0.1)[1] == "tau2"


def test_gi_decision_clamps_to_lower_bound():
    s = state(-1.0, -2.0, -3.0)
    assert gi_decide(s, 2, 3) == frozenset({0, 1})


# -- estimator interface ------------------------------------------------------


def test_sklearn_params_roundtrip():
    rule = GapIntersectionRule(1, 3, 2.0, 3.0, 4.0, 5.0)
    assert rule.get_params() == dict(l=1, u=3, a=2.0, b=3.0, c=4.0, d=5.0)
    copy = clone(rule).set_params(b=7.0)
    assert copy.b == 7.0 and rule.b == 3.0
    assert GapRule(2, 3.0).scalar == 3.0 and IntersectionRule(1.0, 2.0).scalar == 2.0


@pytest.mark.parametrize(
    "rule,K",
    [(GapRule(0, 1.0), 3), (GapRule(3, 1.0), 3), (GapRule(1, -1.0), 3),
     (GapIntersectionRule(2, 2), 4), (GapIntersectionRule(0, 5), 4),
     (GapIntersectionRule(0, 2, a=0.0), 4), (IntersectionRule(-1.0, 1.0), 3),
     (IncompleteRule(1.0, math.nan), 3)],
)
def test_invalid_thresholds_rejected(rule, K):
    with pytest.raises((ValueError, TypeError)):
        rule.fit(K)


def test_fit_accepts_panel_int_or_matrix():
    panel = Panel.identical(GaussianMeanShift(), 4)
    assert GapRule(1, 2.0).fit(panel).n_streams_ == 4
    assert GapRule(1, 2.0).fit(4).n_streams_ == 4
    assert GapRule(1, 2.0).fit(np.zeros((4, 3))).n_streams_ == 4


def test_predict_requires_fit_and_returns_indicator():
    X = np.array([[1.0, 1.0, 1.0], [-1.0, -1.0, -1.0], [0.0, 0.0, 0.0]])
    with pytest.raises(NotFittedError):
        GapRule(1, 2.0).predict(X)
    rule = GapRule(1, 2.0).fit(3)
    assert rule.predict(X).tolist() == [1, 0, 0]
    with pytest.raises(ValueError):
        rule.predict(np.zeros((2, 3)))


def test_run_flags_horizon_when_path_ends():
    X = np.full((2, 5), 0.1)
    out = IntersectionRule(10.0, 10.0).run(X)
    assert out.hit_horizon and out.stopping_time == 5 and out.stopped_by == "horizon"


def test_run_stops_at_first_crossing():
    X = np.array([[1.0, 1.0, 1.0, 1.0], [-1.0, -1.0, -1.0, -1.0]])
    out = GapRule(1, 3.9).run(X)
    assert out.stopping_time == 2 and out.stopped_by == "gap"
    assert out.decision == frozenset({0})


def test_run_rejects_non_finite():
    from seqmulti.exceptions import NonFiniteIncrementError

    with pytest.raises(NonFiniteIncrementError):
        GapRule(1, 1.0).run(np.array([[np.nan, 1.0], [0.0, 0.0]]))


# -- thresholds ---------------------------------------------------------------


def test_conservative_thresholds():
    gap = GapRule(1).conservative(10, 1e-2, 1e-4)
    assert gap.c == pytest.approx(abs(math.log(1e-4)) + math.log(9))
    gi = GapIntersectionRule(3, 7).conservative(10, 1e-2, 1e-2)
    assert gi.a == gi.b == pytest.approx(math.log(1000))
    assert gi.c == pytest.approx(math.log(100) + math.log(70))
    assert gi.d == pytest.approx(math.log(100) + math.log(70))
    inter = IntersectionRule().conservative(10, 1e-2, 1e-2)
    assert inter.a == inter.b == pytest.approx(6.907755278982137, rel=1e-14)
    assert isinstance(IncompleteRule().conservative(10, 0.1, 0.1), IncompleteRule)


def test_with_scalar_ties():
    rule = GapIntersectionRule(3, 7).with_scalar(10.0, 10, 1e-2, 1e-2)
    assert (rule.a, rule.b) == (10.0, 10.0)
    assert rule.c == pytest.approx(10 + math.log(7)) and rule.d == pytest.approx(10 + math.log(7))
    rule = IntersectionRule().with_scalar(4.0, 10, 1e-2, 1e-4)
    assert rule.a == pytest.approx(8.0) and rule.b == 4.0
    assert GapRule(2).with_scalar(3.5, 10, 0.1, 0.1).c == 3.5


# -- trial runners ------------------------------------------------------------


RULES = [
    GapRule(2, 4.0),
    GapIntersectionRule(1, 3, 3.0, 3.0, 4.0, 4.0),
    GapIntersectionRule(0, 5, 3.0, 3.0, 4.0, 4.0),
    IntersectionRule(3.0, 2.5),
    IncompleteRule(3.0, 3.0),
]


@pytest.mark.parametrize("rule", RULES, ids=lambda r: type(r).__name__)
@pytest.mark.parametrize("with_proposal", [False, True])
def test_reference_runner_matches_batch_kernel(rule, with_proposal):
    """Bit-identical paths, decisions and likelihood ratios."""
    panel = Panel.identical(GaussianMeanShift(), 5)
    A = frozenset({0, 3})
    proposal = build_proposal(rule, A, "typeI", 5, defensive=0.1) if with_proposal else None
    batch = simulate(rule, panel, A, 40, 99, 400, proposal, rep0=7)
    for i in range(40):
        o = run_procedure(panel, A, rule, 99, 400, 7 + i, proposal)
        assert o.stopping_time == batch.stopping_time[i]
        assert o.stopped_by == STOP_TAGS[int(batch.stop_code[i])]
        assert o.decision == frozenset(np.flatnonzero(batch.decisions[i]).tolist())
        if proposal is not None:
            assert log_likelihood_ratio_at_stop(A, proposal, o.final_state) == batch.log_lr[i]


def test_python_engine_for_generic_streams_matches_compiled_gaussian():
    """A generic model that draws exactly like the Gaussian one gives the
    same trials through the pure-Python batch path."""
    from seqmulti import _kernels

    def draw(mean):
        return lambda rng: _kernels.gaussian_llr(0.0, 0.5, 1.0, mean + rng.normal())

    generic = Panel([GenericIncrement(draw(0.0), draw(0.5), 0.125, 0.125)] * 4)
    compiled = Panel.identical(GaussianMeanShift(), 4)
    rule = GapRule(1, 3.0)
    a = simulate(rule, generic, {2}, 30, 5, 500)
    b = simulate(rule, compiled, {2}, 30, 5, 500)
    assert np.array_equal(a.stopping_time, b.stopping_time)
    assert np.array_equal(a.decisions, b.decisions)


def test_run_procedure_is_pure():
    panel = Panel.identical(GaussianMeanShift(), 4)
    rule = GapIntersectionRule(1, 3, 3.0, 3.0, 4.0, 4.0)
    a = run_procedure(panel, {1, 2}, rule, 3, 1000, rep=5)
    b = run_procedure(panel, {1, 2}, rule, 3, 1000, rep=5)
    assert a.stopping_time == b.stopping_time and a.decision == b.decision
    assert np.array_equal(a.final_state.lam, b.final_state.lam)


def test_run_procedure_horizon_flag():
    panel = Panel.identical(GaussianMeanShift(), 3)
    out = run_procedure(panel, {0}, IntersectionRule(50.0, 50.0), 0, 3)
    assert out.stopped_by == "horizon" and out.stopping_time == 3 and out.hit_horizon
    with pytest.raises(ValueError):
        run_procedure(panel, {0}, IntersectionRule(), 0, 0)


def test_incomplete_rule_exit_times_and_frozen_decisions():
    panel = Panel.identical(GaussianMeanShift(), 4)
    for rep in range(20):
        out = incomplete_run(panel, {0, 1}, 2.0, 2.0, 17, 10_000, rep)
        assert out.stopping_time == max(out.exit_times)
        lam = out.final_state.lam
        assert np.all((lam <= -2.0) | (lam >= 2.0))
        assert out.decision == frozenset(np.flatnonzero(lam > 0).tolist())


def test_decision_sizes_on_simulated_paths():
    panel = Panel.identical(GaussianMeanShift(), 6)
    gi = simulate(GapIntersectionRule(2, 4, 2.0, 2.0, 3.0, 3.0), panel, {0, 1, 2}, 500, 1)
    sizes = gi.decisions.sum(axis=1)
    assert sizes.min() >= 2 and sizes.max() <= 4
    gap = simulate(GapRule(2, 3.0), panel, {0, 1}, 500, 1)
    assert np.all(gap.decisions.sum(axis=1) == 2)
