"""Compiled primitives shared by the reference engine and the batch simulator.

Everything that touches a random draw or a floating-point increment lives
here, so the pure-Python trial runner and the parallel batch kernel produce
bit-identical paths for equal ``(seed, replication)`` keys.

Random numbers come from xoshiro256** whose 256-bit state is derived from
``(seed, key)`` by SplitMix64.  Uniforms use the top 53 bits; standard normals
use the Marsaglia polar method with the spare variate cached.
"""

import math
import os

import numpy as np
from numba import config, njit, prange

if "NUMBA_THREADING_LAYER" not in os.environ:
    # skip the TBB probe, which warns on hosts with an old TBB
    try:
        from numba.np.ufunc import omppool  # noqa: F401

        config.THREADING_LAYER = "omp"
    except ImportError:
        config.THREADING_LAYER = "workqueue"

# Model codes
GAUSSIAN = 0
BERNOULLI = 1

# Rule codes
KIND_GAP = 0
KIND_GI = 1
KIND_INTERSECTION = 2
KIND_INCOMPLETE = 3

# Stop-reason codes (order matters for the tau priority)
BY_GAP = 0
BY_TAU1 = 1
BY_TAU2 = 2
BY_TAU3 = 3
BY_INTERSECTION = 4
BY_INCOMPLETE = 5
BY_HORIZON = 6
NOT_STOPPED = -1

_GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_MIX1 = np.uint64(0xBF58476D1CE4E5B9)
_MIX2 = np.uint64(0x94D049BB133111EB)
_KEYMUL = np.uint64(0xD1B54A32D192ED03)
_INV53 = 1.0 / 9007199254740992.0


@njit(cache=True)
def _mix64(z):
    z = (z ^ (z >> np.uint64(30))) * _MIX1
    z = (z ^ (z >> np.uint64(27))) * _MIX2
    return z ^ (z >> np.uint64(31))


@njit(cache=True)
def seed_state(seed, key, state, cache):
    """Fill ``state`` (uint64[4]) for stream ``key`` of master ``seed``."""
    x = _mix64(np.uint64(seed) + _GOLDEN) ^ (np.uint64(key) * _KEYMUL)
    for i in range(4):
        x = x + _GOLDEN
        state[i] = _mix64(x)
    cache[0] = 0.0
    cache[1] = 0.0


@njit(cache=True)
def _rotl(x, k):
    return (x << np.uint64(k)) | (x >> np.uint64(64 - k))


@njit(cache=True)
def next_u64(s):
    result = _rotl(s[1] * np.uint64(5), 7) * np.uint64(9)
    t = s[1] << np.uint64(17)
    s[2] ^= s[0]
    s[3] ^= s[1]
    s[1] ^= s[2]
    s[0] ^= s[3]
    s[2] ^= t
    s[3] = _rotl(s[3], 45)
    return result


@njit(cache=True)
def uniform(s):
    return np.float64(next_u64(s) >> np.uint64(11)) * _INV53


@njit(cache=True)
def normal(s, cache):
    if cache[1] != 0.0:
        cache[1] = 0.0
        return cache[0]
    while True:
        u = 2.0 * uniform(s) - 1.0
        v = 2.0 * uniform(s) - 1.0
        w = u * u + v * v
        if 0.0 < w < 1.0:
            break
    f = math.sqrt(-2.0 * math.log(w) / w)
    cache[0] = v * f
    cache[1] = 1.0
    return u * f


@njit(cache=True)
def gaussian_llr(theta0, theta1, sigma, x):
    return (theta1 - theta0) / (sigma * sigma) * x - (theta1 * theta1 - theta0 * theta0) / (
        2.0 * sigma * sigma
    )


@njit(cache=True)
def bernoulli_llr(p0, p1, x):
    if x:
        return math.log(p1 / p0)
    return math.log((1.0 - p1) / (1.0 - p0))


@njit(cache=True)
def increment(code, p0, p1, p2, signal, s, cache):
    """One LLR increment for a Gaussian (p0=theta0, p1=theta1, p2=sigma) or
    Bernoulli (p0, p1) stream, drawn under the alternative when ``signal``."""
    if code == GAUSSIAN:
        mean = p1 if signal else p0
        return gaussian_llr(p0, p1, p2, mean + p2 * normal(s, cache))
    p = p1 if signal else p0
    return bernoulli_llr(p0, p1, uniform(s) < p)


@njit(cache=True)
def fill_increments(code, p0, p1, p2, signal, s, cache, out):
    for i in range(out.size):
        out[i] = increment(code, p0, p1, p2, signal, s, cache)


@njit(cache=True)
def resort(lam, order):
    """Insertion sort of ``order`` by descending ``lam``, ties by index."""
    for i in range(1, order.size):
        j = order[i]
        v = lam[j]
        pos = i
        while pos > 0:
            q = order[pos - 1]
            if lam[q] > v or (lam[q] == v and q < j):
                break
            order[pos] = q
            pos -= 1
        order[pos] = j


@njit(cache=True)
def check_stop(kind, lam, order, fpar, ipar):
    """Stop-reason code of the first satisfied criterion, or NOT_STOPPED."""
    K = lam.size
    if kind == KIND_GAP:
        m = ipar[0]
        if lam[order[m - 1]] - lam[order[m]] >= fpar[2]:
            return BY_GAP
        return NOT_STOPPED
    a = fpar[0]
    b = fpar[1]
    outside = True
    p = 0
    for k in range(K):
        if lam[k] > 0.0:
            p += 1
        if -a < lam[k] < b:
            outside = False
    if kind == KIND_INTERSECTION:
        return BY_INTERSECTION if outside else NOT_STOPPED
    lo = ipar[0]
    hi = ipar[1]
    # tau1 needs l >= 1 and tau3 needs u < K (sentinel ranks never fire)
    if lo >= 1:
        v = lam[order[lo]]
        if v <= -a and lam[order[lo - 1]] - v >= fpar[2]:
            return BY_TAU1
    if outside and lo <= p <= hi:
        return BY_TAU2
    if hi < K:
        v = lam[order[hi - 1]]
        if v >= b and v - lam[order[hi]] >= fpar[3]:
            return BY_TAU3
    return NOT_STOPPED


@njit(cache=True)
def decide(kind, lam, order, ipar, dec):
    """Write the 0/1 decision for the current state into ``dec``."""
    K = lam.size
    for k in range(K):
        dec[k] = False
    if kind == KIND_GAP:
        top = ipar[0]
    else:
        top = 0
        for k in range(K):
            if lam[k] > 0.0:
                top += 1
        if kind == KIND_GI:
            top = min(max(top, ipar[0]), ipar[1])
    for r in range(top):
        dec[order[r]] = True


@njit(cache=True)
def log_mixture_lr(lam, signs, logw):
    """log sum_c w_c exp(sum_k signs[c, k] lam[k]), evaluated stably."""
    n = logw.size
    best = -np.inf
    vals = np.empty(n)
    for c in range(n):
        t = logw[c]
        for k in range(lam.size):
            if signs[c, k] != 0:
                t += signs[c, k] * lam[k]
        vals[c] = t
        best = max(best, t)
    if best == -np.inf or best == np.inf:
        return best
    acc = 0.0
    for c in range(n):
        acc += math.exp(vals[c] - best)
    return best + math.log(acc)


@njit(cache=True)
def pick_component(cumw, u):
    n = cumw.size
    for c in range(n - 1):
        if u < cumw[c]:
            return c
    return n - 1


@njit(cache=True)
def _trial(kind, fpar, ipar, mcode, mpar, truth, comp_mask, comp_cumw, comp_sign,
           comp_logw, seed, rep, horizon, dec):
    """Run one replication; returns (T, stop code, log LR) and fills ``dec``."""
    K = mcode.size
    s = np.empty(4, dtype=np.uint64)
    cache = np.zeros(2)
    seed_state(seed, rep, s, cache)
    signal = truth.copy()
    use_is = comp_cumw.size > 0
    if use_is:
        c = pick_component(comp_cumw, uniform(s))
        for k in range(K):
            signal[k] = comp_mask[c, k]
    lam = np.zeros(K)
    order = np.arange(K)
    frozen = np.zeros(K)
    exited = np.zeros(K, dtype=np.bool_)
    n_exited = 0
    a = fpar[0]
    b = fpar[1]
    T = 0
    by = NOT_STOPPED
    for n in range(1, horizon + 1):
        for k in range(K):
            lam[k] += increment(mcode[k], mpar[k, 0], mpar[k, 1], mpar[k, 2],
                                signal[k], s, cache)
        T = n
        if kind == KIND_INCOMPLETE:
            for k in range(K):
                if not exited[k] and (lam[k] >= b or lam[k] <= -a):
                    exited[k] = True
                    frozen[k] = lam[k]
                    n_exited += 1
            if n_exited == K:
                by = BY_INCOMPLETE
                break
        else:
            resort(lam, order)
            by = check_stop(kind, lam, order, fpar, ipar)
            if by != NOT_STOPPED:
                break
    if by == NOT_STOPPED:
        by = BY_HORIZON
    if kind == KIND_INCOMPLETE:
        for k in range(K):
            if not exited[k]:
                frozen[k] = lam[k]
            dec[k] = frozen[k] > 0.0
        final = frozen
    else:
        decide(kind, lam, order, ipar, dec)
        final = lam
    loglr = 0.0
    if use_is:
        loglr = log_mixture_lr(final, comp_sign, comp_logw)
    return T, by, loglr


@njit(cache=True, parallel=True)
def simulate_batch(kind, fpar, ipar, mcode, mpar, truth, comp_mask, comp_cumw,
                   comp_sign, comp_logw, seed, rep0, horizon,
                   out_T, out_by, out_dec, out_loglr):
    """Replications ``rep0 .. rep0 + len(out_T) - 1``; each one is keyed only by
    its own index, so output does not depend on the thread count."""
    for i in prange(out_T.size):
        T, by, loglr = _trial(kind, fpar, ipar, mcode, mpar, truth, comp_mask,
                              comp_cumw, comp_sign, comp_logw, seed, rep0 + i,
                              horizon, out_dec[i])
        out_T[i] = T
        out_by[i] = by
        out_loglr[i] = loglr
