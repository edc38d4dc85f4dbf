"""Regression table and threshold sweeps, emitted as CSV text.

Every number comes from a keyed simulation seeded by ``config.seed``, so the
same configuration always produces the same bytes.
"""

from __future__ import annotations

import csv
import io
import logging
import math

from .bounds import (
    Bounded,
    ErrorSpec,
    Exact,
    ess_lower_bound,
    first_order_ess,
    fwe_bound_gap,
    fwe_bounds_gi,
)
from .config import ExperimentConfig
from .exceptions import CalibrationError
from .importance import is_estimate_fwe
from .montecarlo import calibrate, estimate_ess
from .procedures import GapIntersectionRule, GapRule, SequentialRule
from .simulation import TYPE_I

log = logging.getLogger(__name__)

TABLE1_COLUMNS = (
    "procedure", "size", "threshold", "error_estimate", "error_se", "ess", "ess_se",
    "analytic_bound",
)
SWEEP_COLUMNS = (
    "procedure", "alpha", "size", "threshold", "error_estimate", "error_se",
    "relative_error", "ess", "ess_se", "first_order", "normalized_ratio", "lower_bound",
    "conservative_threshold", "conservative_ess", "conservative_ess_se", "status",
)
# columns printed in scientific notation
PROBABILITY_COLUMNS = frozenset(
    {"alpha", "beta", "error_estimate", "error_se", "analytic_bound", "bound_type1",
     "bound_type2", "target"}
)

GAP_SIZES = (1, 3, 5)
GI_BOUNDS = (3, 7)
GI_SIZES = (3, 4, 5, 7)


def format_value(column: str, value) -> str:
    if isinstance(value, bool) or value is None:
        return "" if value is None else str(value).lower()
    if isinstance(value, int):
        return str(value)
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if column in PROBABILITY_COLUMNS:
            return f"{value:.16e}"
        return f"{value:.17g}"
    return str(value)


def to_csv(rows, columns) -> str:
    """CSV text with a header row and the fixed column order."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(c, row.get(c)) for c in columns])
    return buf.getvalue()


def procedure_name(rule: SequentialRule) -> str:
    return {
        "GapRule": "gap",
        "GapIntersectionRule": "gi",
        "IntersectionRule": "intersection",
        "IncompleteRule": "incomplete",
    }[type(rule).__name__]


def representative(size: int) -> frozenset:
    return frozenset(range(size))


def run_table1(config: ExperimentConfig):
    """Rows for the gap rule at c (sizes 1, 3, 5) and the gap-intersection
    rule with l=3, u=7 at b, a=b, c=d=b+log 7 (sizes 3, 4, 5, 7)."""
    panel = config.panel()
    K = panel.K
    if K < max(GI_SIZES) + 1:
        raise ValueError(f"the regression table needs K >= {max(GI_SIZES) + 1}, got {K}")
    rows = []
    for m in GAP_SIZES:
        rule = GapRule(m, config.c)
        rows.append(_table_row(config, panel, rule, m,
                               fwe_bound_gap(K, m, config.c)))
    b = config.b
    l, u = GI_BOUNDS
    tie = b + math.log(K - l)
    rule = GapIntersectionRule(l, u, b, b, tie, tie)
    for size in GI_SIZES:
        bound = fwe_bounds_gi(K, size, rule.a, rule.b, rule.c, rule.d)[0]
        rows.append(_table_row(config, panel, rule, size, bound))
    return rows


def _table_row(config, panel, rule, size, bound):
    A = representative(size)
    err = is_estimate_fwe(rule, panel, A, TYPE_I, config.reps, config.seed, config.horizon)
    ess = estimate_ess(rule, panel, A, config.ess_replications, config.seed, config.horizon)
    log.info("%s |A|=%d error=%.4g ess=%.4g", procedure_name(rule), size, err.value, ess.value)
    return {
        "procedure": procedure_name(rule),
        "size": size,
        "threshold": float(rule.scalar),
        "error_estimate": err.value,
        "error_se": err.std_error,
        "ess": ess.value,
        "ess_se": ess.std_error,
        "analytic_bound": float(bound),
    }


def sweep_prior(config: ExperimentConfig, rule: SequentialRule):
    """Prior class the sweep calibrates over."""
    K = config.K
    if isinstance(rule, GapRule):
        return Exact(rule.m)
    if isinstance(rule, GapIntersectionRule):
        return Bounded(rule.l, rule.u)
    return Bounded(0, K) if config.prior == "exact" else Bounded(config.l, config.upper)


def run_figure_sweep(config: ExperimentConfig, rule: SequentialRule | None = None):
    """One calibration per alpha (alpha = beta), then ESS for one signal set
    per admissible size, under both the calibrated and the conservative
    thresholds.  ``config.sizes`` restricts the sizes used for both the
    worst-case scan and the rows.  A failed calibration yields rows flagged
    in ``status``."""
    panel = config.panel()
    K = panel.K
    rule = rule if rule is not None else config.base_rule()
    prior = sweep_prior(config, rule)
    prior.validate(K)
    name = procedure_name(rule)
    sizes = config.sizes if config.sizes is not None else tuple(prior.sizes(K))
    bad = [s for s in sizes if s not in prior.sizes(K)]
    if bad:
        raise ValueError(f"sizes {bad} are outside {prior}")
    candidates = [representative(s) for s in sizes]
    rows = []
    for alpha in config.alphas:
        spec = ErrorSpec(alpha, alpha)
        status = "ok"
        try:
            result = calibrate(rule, panel, spec, prior, tol=config.tol, reps=config.reps,
                               seed=config.seed, horizon=config.horizon,
                               candidates=candidates)
            tuned, err = result.rule, result.achieved_error
        except CalibrationError as exc:
            log.warning("calibration failed at alpha=%g: %s", alpha, exc)
            tuned, err = None, None
            status = "calibration_failed"
        safe = rule.conservative(K, alpha, alpha)
        for size, A in zip(sizes, candidates):
            row = {"procedure": name, "alpha": alpha, "size": size, "status": status}
            first = first_order_ess(panel, A, prior, spec)
            row["first_order"] = first
            row["lower_bound"] = ess_lower_bound(panel, A, prior, spec)
            cons = estimate_ess(safe, panel, A, config.ess_replications, config.seed,
                                config.horizon)
            row["conservative_threshold"] = float(safe.scalar)
            row["conservative_ess"] = cons.value
            row["conservative_ess_se"] = cons.std_error
            if tuned is None:
                row.update({k: math.nan for k in ("threshold", "error_estimate", "error_se",
                                                 "relative_error", "ess", "ess_se",
                                                 "normalized_ratio")})
            else:
                ess = estimate_ess(tuned, panel, A, config.ess_replications, config.seed,
                                   config.horizon)
                row["threshold"] = float(tuned.scalar)
                row["error_estimate"] = err.value
                row["error_se"] = err.std_error
                row["relative_error"] = err.relative_error
                row["ess"] = ess.value
                row["ess_se"] = ess.std_error
                row["normalized_ratio"] = ess.value / first
            rows.append(row)
    return rows
