"""Exact answers for a two-stream Bernoulli panel by dynamic programming.

With Bernoulli(p0, p1) streams and p1 = 1 - p0 every LLR is an integer
multiple of log(p1/p0), so the joint state is a pair of integers and the
distribution over unstopped states can be propagated step by step.  Nothing
here shares code with the package.
"""

import math
from collections import defaultdict


def _gap_stop(s, step, m, c):
    lam = sorted((v * step for v in s), reverse=True)
    if lam[m - 1] - lam[m] >= c:
        top = sorted(range(len(s)), key=lambda k: (-s[k], k))[:m]
        return frozenset(top)
    return None


def _intersection_stop(s, step, a, b):
    lam = [v * step for v in s]
    if all(x <= -a or x >= b for x in lam):
        return frozenset(k for k, x in enumerate(lam) if x > 0)
    return None


def exact_outcomes(p0, p1, A, horizon, stop):
    """(P(stop with each decision), P(horizon), E[min(T, horizon)]).

    ``stop(state)`` returns the decision frozenset or None.  The two
    streams are 0 and 1; stream k moves up with probability p1 if k is in A
    and p0 otherwise.
    """
    up = [p1 if k in A else p0 for k in range(2)]
    live = {(0, 0): 1.0}
    decisions = defaultdict(float)
    ess = 0.0
    for n in range(1, horizon + 1):
        nxt = defaultdict(float)
        for (s0, s1), pr in live.items():
            for d0 in (1, -1):
                for d1 in (1, -1):
                    q = (up[0] if d0 > 0 else 1 - up[0]) * (up[1] if d1 > 0 else 1 - up[1])
                    nxt[(s0 + d0, s1 + d1)] += pr * q
        live = {}
        for state, pr in nxt.items():
            dec = stop(state)
            if dec is None:
                live[state] = pr
            else:
                decisions[dec] += pr
                ess += n * pr
    stuck = math.fsum(live.values())
    ess += horizon * stuck
    return dict(decisions), stuck, ess


def gap_oracle(p0, p1, A, horizon, c, m=1):
    step = math.log(p1 / p0)
    return exact_outcomes(p0, p1, A, horizon, lambda s: _gap_stop(s, step, m, c))


def intersection_oracle(p0, p1, A, horizon, a, b):
    step = math.log(p1 / p0)
    return exact_outcomes(p0, p1, A, horizon, lambda s: _intersection_stop(s, step, a, b))


def error_probability(outcomes, A, kind):
    """Exact error probability; trials cut at the horizon count as errors."""
    decisions, stuck, _ = outcomes
    A = frozenset(A)
    if kind == "any":
        bad = [p for d, p in decisions.items() if d != A]
    elif kind == "typeI":
        bad = [p for d, p in decisions.items() if d - A]
    else:
        bad = [p for d, p in decisions.items() if A - d]
    return math.fsum(bad) + stuck
