"""Batch simulation of many independent trials of one rule."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .models import Panel, signal_mask, signal_set
from .procedures import STOP_TAGS, GapRule, SequentialRule, run_procedure
from .rng import check_seed
from .validation import check_horizon, check_reps

DEFAULT_HORIZON = 100_000

TYPE_I = "typeI"
TYPE_II = "typeII"
ERROR_TYPES = (TYPE_I, TYPE_II)


def check_error_type(error_type):
    if error_type not in ERROR_TYPES:
        raise ValueError(f"error_type must be one of {ERROR_TYPES}, got {error_type!r}")
    return error_type


@dataclass
class Estimate:
    value: float
    std_error: float
    reps: int
    horizon_hits: int = 0

    @classmethod
    def from_samples(cls, values, horizon_hits=0) -> "Estimate":
        """Mean and standard error with exactly rounded sums, so the result
        depends only on the values and their order."""
        values = np.asarray(values, dtype=float)
        n = values.size
        mean = math.fsum(values) / n
        var = math.fsum((values - mean) ** 2) / (n - 1) if n > 1 else 0.0
        return cls(mean, math.sqrt(var / n), int(n), int(horizon_hits))

    @property
    def relative_error(self) -> float:
        return self.std_error / self.value if self.value > 0 else math.inf


@dataclass
class BatchResult:
    """Per-replication outputs, in replication order."""

    stopping_time: np.ndarray
    stop_code: np.ndarray
    decisions: np.ndarray
    log_lr: np.ndarray | None
    truth: np.ndarray
    rule: SequentialRule

    @property
    def reps(self) -> int:
        return self.stopping_time.size

    @property
    def horizon_hits(self) -> np.ndarray:
        return self.stop_code == _kernels.BY_HORIZON

    def errors(self, error_type: str = TYPE_I) -> np.ndarray:
        """Error indicator under the true signal set; horizon hits count as
        errors of both kinds."""
        dec, truth = self.decisions, self.truth
        if isinstance(self.rule, GapRule):
            err = np.any(dec != truth, axis=1)
        elif check_error_type(error_type) == TYPE_I:
            err = np.any(dec & ~truth, axis=1)
        else:
            err = np.any(~dec & truth, axis=1)
        return err | self.horizon_hits


def simulate(rule: SequentialRule, panel: Panel, A, reps: int, seed: int,
             horizon: int = DEFAULT_HORIZON, proposal=None, rep0: int = 0) -> BatchResult:
    """Run replications ``rep0 .. rep0 + reps - 1`` under P_A, or under the
    importance-sampling ``proposal`` when one is given (then ``log_lr`` holds
    the log likelihood ratio of the proposal against P_A at stopping)."""
    reps = check_reps(reps, 1)
    horizon = check_horizon(horizon)
    seed = check_seed(seed)
    K = panel.K
    rule._checked(K)
    A = signal_set(A, K)
    truth = signal_mask(A, K)
    if not panel.compiled:
        return _simulate_python(rule, panel, A, truth, reps, seed, horizon, proposal, rep0)
    fpar, ipar = rule.kernel_params()
    codes, params = panel.kernel_arrays()
    if proposal is None:
        comp_mask = np.zeros((0, K), dtype=bool)
        cumw = np.zeros(0)
        signs = np.zeros((0, K))
        logw = np.zeros(0)
    else:
        comp_mask = proposal.masks(K)
        cumw = proposal.cumulative_weights()
        signs = proposal.sign_matrix(A, K)
        logw = np.log(proposal.weights)
    out_T = np.empty(reps, dtype=np.int64)
    out_by = np.empty(reps, dtype=np.int64)
    out_dec = np.empty((reps, K), dtype=bool)
    out_loglr = np.zeros(reps)
    _kernels.simulate_batch(
        rule.kind, fpar, ipar, codes, params, truth, comp_mask, cumw, signs, logw,
        np.uint64(seed), np.uint64(rep0), horizon, out_T, out_by, out_dec, out_loglr,
    )
    return BatchResult(out_T, out_by, out_dec, out_loglr if proposal is not None else None,
                       truth, rule)


def _simulate_python(rule, panel, A, truth, reps, seed, horizon, proposal, rep0):
    from .importance import log_likelihood_ratio_at_stop

    K = panel.K
    codes = {tag: code for code, tag in STOP_TAGS.items()}
    out_T = np.empty(reps, dtype=np.int64)
    out_by = np.empty(reps, dtype=np.int64)
    out_dec = np.zeros((reps, K), dtype=bool)
    out_loglr = np.zeros(reps)
    for i in range(reps):
        o = run_procedure(panel, A, rule, seed, horizon, rep0 + i, proposal)
        out_T[i] = o.stopping_time
        out_by[i] = codes[o.stopped_by]
        out_dec[i, list(o.decision)] = True
        if proposal is not None:
            out_loglr[i] = log_likelihood_ratio_at_stop(A, proposal, o.final_state)
    return BatchResult(out_T, out_by, out_dec, out_loglr if proposal is not None else None,
                       truth, rule)

