import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seqmulti import LlrState, pairwise_llr
from seqmulti.exceptions import NonFiniteIncrementError

finite = st.floats(-50, 50, allow_nan=False, allow_infinity=False)
vectors = st.lists(finite, min_size=2, max_size=9)


def test_initial_state():
    s = LlrState.initial(3)
    assert s.time == 0 and s.positive_count == 0
    assert s.order.tolist() == [0, 1, 2]
    with pytest.raises(ValueError):
        LlrState.initial(0)


def test_update_accumulates_and_reorders():
    s = LlrState.initial(3).update([1.0, -2.0, 3.0]).update([0.5, 0.5, -4.0])
    assert s.time == 2
    assert s.lam.tolist() == [1.5, -1.5, -1.0]
    assert s.order.tolist() == [0, 2, 1]
    assert s.positive_count == 1
    assert s.top(1) == frozenset({0})


def test_ties_break_by_stream_id():
    s = LlrState.from_values([1.0, 2.0, 1.0, 2.0])
    assert s.order.tolist() == [1, 3, 0, 2]


def test_ordered_value_sentinels():
    s = LlrState.from_values([0.5, -1.0])
    assert s.ordered_value(0) == -math.inf
    assert s.ordered_value(3) == math.inf
    assert s.ordered_value(1) == 0.5 and s.ordered_value(2) == -1.0
    assert s.ordered_index(2) == 1
    with pytest.raises(ValueError):
        s.ordered_value(4)
    with pytest.raises(ValueError):
        s.ordered_index(0)


def test_update_rejects_non_finite_and_bad_shape():
    s = LlrState.initial(2)
    with pytest.raises(NonFiniteIncrementError):
        s.update([np.nan, 0.0])
    with pytest.raises(NonFiniteIncrementError):
        s.update([np.inf, 0.0])
    with pytest.raises(ValueError):
        s.update([1.0, 2.0, 3.0])


def test_state_is_immutable():
    s = LlrState.from_values([1.0, 2.0])
    with pytest.raises(ValueError):
        s.lam[0] = 5.0


@given(vectors, vectors)
def test_order_is_a_descending_sort(start, inc):
    k = min(len(start), len(inc))
    s = LlrState.from_values(start[:k]).update(inc[:k])
    values = s.lam[s.order]
    assert np.all(np.diff(values) <= 0)
    assert sorted(s.order.tolist()) == list(range(k))
    assert s.positive_count == int(np.sum(s.lam > 0))


@given(vectors, st.data())
def test_pairwise_llr_antisymmetric(lam, data):
    K = len(lam)
    ids = st.frozensets(st.integers(0, K - 1))
    A, C = data.draw(ids), data.draw(ids)
    s = LlrState.from_values(lam)
    if A == C:
        with pytest.raises(ValueError):
            pairwise_llr(s, A, C)
        return
    assert pairwise_llr(s, A, C) == pytest.approx(-pairwise_llr(s, C, A))


@settings(max_examples=50)
@given(vectors, st.data())
def test_pairwise_llr_is_chainable(lam, data):
    K = len(lam)
    ids = st.frozensets(st.integers(0, K - 1))
    A, B, C = data.draw(ids), data.draw(ids), data.draw(ids)
    if len({A, B, C}) < 3:
        return
    s = LlrState.from_values(lam)
    assert pairwise_llr(s, A, C) == pytest.approx(
        pairwise_llr(s, A, B) + pairwise_llr(s, B, C), abs=1e-9
    )
