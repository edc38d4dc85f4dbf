"""Experiment configuration read from INI-style files.

Sections and keys (all optional; defaults give the symmetric K=10 Gaussian
setup with alpha = beta)::

    [panel]      K, model (gaussian|bernoulli), theta0, theta1, sigma, p0, p1
    [prior]      kind (exact|bounded), m, l, u, sizes
    [procedure]  kind (gap|gi|intersection|incomplete),
                 thresholds (explicit|conservative|calibrated),
                 a, b, c, d, alpha, beta, tol
    [run]        reps, ess_reps, seed, horizon, alphas, out
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, replace
from itertools import pairwise

from .bounds import Bounded, ErrorSpec, Exact
from .models import Bernoulli, GaussianMeanShift, Panel
from .procedures import GapIntersectionRule, GapRule, IncompleteRule, IntersectionRule
from .rng import check_seed
from .simulation import DEFAULT_HORIZON
from .validation import check_horizon, check_reps

MODELS = ("gaussian", "bernoulli")
PROCEDURES = ("gap", "gi", "intersection", "incomplete")
THRESHOLD_SOURCES = ("explicit", "conservative", "calibrated")
DEFAULT_ALPHAS = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8)


@dataclass
class ExperimentConfig:
    K: int = 10
    model: str = "gaussian"
    theta0: float = 0.0
    theta1: float = 0.5
    sigma: float = 1.0
    p0: float = 0.3
    p1: float = 0.7
    prior: str = "exact"
    m: int = 1
    l: int = 0
    u: int | None = None
    sizes: tuple | None = None
    procedure: str = "gap"
    thresholds: str = "explicit"
    a: float = 10.0
    b: float = 10.0
    c: float = 10.0
    d: float = 10.0
    alpha: float = 1e-2
    beta: float = 1e-2
    tol: float = 0.05
    reps: int = 100_000
    ess_reps: int | None = None
    seed: int = 0
    horizon: int = DEFAULT_HORIZON
    alphas: tuple = field(default=DEFAULT_ALPHAS)
    out: str | None = None

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.procedure not in PROCEDURES:
            raise ValueError(f"procedure must be one of {PROCEDURES}, got {self.procedure!r}")
        if self.thresholds not in THRESHOLD_SOURCES:
            raise ValueError(
                f"thresholds must be one of {THRESHOLD_SOURCES}, got {self.thresholds!r}"
            )
        if self.prior not in ("exact", "bounded"):
            raise ValueError(f"prior must be 'exact' or 'bounded', got {self.prior!r}")
        if self.K < 2:
            raise ValueError("K must be at least 2")
        self.panel()
        self.prior_class().validate(self.K)
        if self.sizes is not None:
            self.sizes = tuple(int(x) for x in self.sizes)
            if not self.sizes or any(not 0 <= x <= self.K for x in self.sizes):
                raise ValueError(f"sizes must be a non-empty list within 0..{self.K}")
        ErrorSpec(self.alpha, self.beta)
        alphas = tuple(float(x) for x in self.alphas)
        if not alphas or any(not 0 < x < 1 for x in alphas):
            raise ValueError("alpha grid must be a non-empty list of values in (0, 1)")
        if any(x <= y for x, y in pairwise(alphas)):
            raise ValueError("alpha grid must be strictly decreasing")
        self.alphas = alphas
        check_reps(self.reps)
        if self.ess_reps is not None:
            check_reps(self.ess_reps)
        check_seed(self.seed)
        check_horizon(self.horizon)
        self.base_rule()._validate(self.K)

    @property
    def upper(self) -> int:
        return self.K if self.u is None else self.u

    @property
    def ess_replications(self) -> int:
        return self.reps if self.ess_reps is None else self.ess_reps

    @property
    def error_spec(self) -> ErrorSpec:
        return ErrorSpec(self.alpha, self.beta)

    def panel(self) -> Panel:
        if self.model == "gaussian":
            stream = GaussianMeanShift(self.theta0, self.theta1, self.sigma)
        else:
            stream = Bernoulli(self.p0, self.p1)
        return Panel.identical(stream, self.K)

    def prior_class(self):
        return Exact(self.m) if self.prior == "exact" else Bounded(self.l, self.upper)

    def base_rule(self):
        """The rule with the explicit thresholds from the file."""
        if self.procedure == "gap":
            return GapRule(self.m, self.c)
        if self.procedure == "gi":
            return GapIntersectionRule(self.l, self.upper, self.a, self.b, self.c, self.d)
        if self.procedure == "intersection":
            return IntersectionRule(self.a, self.b)
        return IncompleteRule(self.a, self.b)

    def updated(self, **changes) -> "ExperimentConfig":
        changes = {k: v for k, v in changes.items() if v is not None}
        return replace(self, **changes)


_SECTIONS = {
    "panel": {"K": int, "model": str, "theta0": float, "theta1": float, "sigma": float,
              "p0": float, "p1": float},
    "prior": {"kind": str, "m": int, "l": int, "u": int, "sizes": str},
    "procedure": {"kind": str, "thresholds": str, "a": float, "b": float, "c": float,
                  "d": float, "alpha": float, "beta": float, "tol": float},
    "run": {"reps": int, "ess_reps": int, "seed": int, "horizon": int, "alphas": str,
            "out": str},
}


def _parse_float_list(text):
    return tuple(float(x) for x in text.replace(",", " ").split())


def load_config(path) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    with open(path) as fh:
        parser.read_file(fh)
    return config_from_parser(parser)


def parse_config(text: str) -> ExperimentConfig:
    parser = configparser.ConfigParser()
    parser.optionxform = str
    parser.read_string(text)
    return config_from_parser(parser)


def config_from_parser(parser: configparser.ConfigParser) -> ExperimentConfig:
    values = {}
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ValueError(f"unknown config section [{section}]")
        types = _SECTIONS[section]
        for key, raw in parser.items(section):
            if key not in types:
                raise ValueError(f"unknown key {key!r} in [{section}]")
            if key == "alphas":
                value = _parse_float_list(raw)
            elif key == "sizes":
                value = tuple(int(x) for x in _parse_float_list(raw))
            else:
                try:
                    value = types[key](raw)
                except ValueError as exc:
                    raise ValueError(f"[{section}] {key} = {raw!r}: {exc}") from None
            if key == "kind":
                key = "prior" if section == "prior" else "procedure"
            values[key] = value
    return ExperimentConfig(**values)
