"""Argument checks shared by the estimators and the CLI."""

import math
import numbers

import numpy as np
from sklearn.utils.validation import check_array

from .exceptions import NonFiniteIncrementError


def check_increments(X, n_streams=None):
    """Validate a (K, n_obs) matrix of LLR increments, one row per stream."""
    try:
        X = check_array(X, dtype=np.float64, ensure_all_finite=True, ensure_min_samples=2)
    except ValueError as exc:
        if "NaN" in str(exc) or "infinity" in str(exc):
            raise NonFiniteIncrementError(str(exc)) from exc
        raise
    if n_streams is not None and X.shape[0] != n_streams:
        raise ValueError(f"expected {n_streams} streams (rows), got {X.shape[0]}")
    return X


def check_positive(name, value):
    if not isinstance(value, numbers.Real) or not math.isfinite(value) or value <= 0:
        raise ValueError(f"threshold {name} must be a positive finite number, got {value!r}")
    return float(value)


def check_probability(name, value):
    if not isinstance(value, numbers.Real) or not 0.0 < value < 1.0:
        raise ValueError(f"{name} must lie strictly inside (0, 1), got {value!r}")
    return float(value)


def check_count(name, value, low, high):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral):
        raise TypeError(f"{name} must be an integer, got {value!r}")
    if not low <= value <= high:
        raise ValueError(f"{name} must be in [{low}, {high}], got {value}")
    return int(value)


def check_reps(reps, minimum=2):
    reps = int(reps)
    if reps < minimum:
        raise ValueError(f"need at least {minimum} replications, got {reps}")
    return reps


def check_horizon(horizon):
    horizon = int(horizon)
    if horizon < 1:
        raise ValueError(f"horizon must be at least 1, got {horizon}")
    return horizon


def n_streams_of(X):
    """K from a Panel, an int, or a (K, n_obs) increment matrix."""
    if isinstance(X, numbers.Integral):
        return int(X)
    K = getattr(X, "K", None)
    if K is not None:
        return int(K)
    return check_increments(X).shape[0]
