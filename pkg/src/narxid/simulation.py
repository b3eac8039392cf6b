"""Model container, free-run simulation, one-step prediction, stability probe.

Free-run (model-predicted-output) simulation feeds the model's own past
outputs back into the recursion; one-step-ahead prediction uses the measured
history.  The stability probe drives a candidate model with constant inputs
(all zeros, all ones) and checks that the response settles around a mean with
small variance instead of growing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, InsufficientDataError
from .regression import IoData, term_columns
from .terms import LagSpec, Signal, Term

__all__ = [
    "Model",
    "FreeRunResult",
    "StabilityVerdict",
    "simulate_free_run",
    "predict_one_step",
    "stability_probe",
    "DIVERGENCE_LIMIT",
]

# Any simulated magnitude beyond this (or non-finite) counts as divergence.
DIVERGENCE_LIMIT = 1e12


@dataclass(frozen=True)
class Model:
    """A selected polynomial model: terms, coefficients and bias.

    The bias (DC offset) is kept separate from the term list; selections
    that include the constant candidate fold its coefficient into ``bias``.
    ``provenance`` carries selection metadata (criterion, per-step metrics,
    data hash) and does not affect behaviour.
    """

    terms: tuple[Term, ...]
    coefficients: tuple[float, ...]
    bias: float = 0.0
    lag_spec: LagSpec | None = None
    provenance: Mapping | None = field(default=None, compare=False)

    def __post_init__(self):
        if len(self.terms) != len(self.coefficients):
            raise ConfigError(
                f"{len(self.terms)} terms but {len(self.coefficients)} coefficients"
            )
        if any(t.is_constant for t in self.terms):
            raise ConfigError("constant term belongs in the bias field")
        values = tuple(float(c) for c in self.coefficients)
        if not all(math.isfinite(c) for c in values) or not math.isfinite(self.bias):
            raise ConfigError("model coefficients must be finite")
        object.__setattr__(self, "coefficients", values)
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.lag_spec is not None:
            if self.max_output_lag > self.lag_spec.n_a or self.max_input_lag > self.lag_spec.n_b:
                raise ConfigError("model terms exceed the declared lag bounds")

    @property
    def n_terms(self) -> int:
        return len(self.terms)

    @property
    def max_output_lag(self) -> int:
        return max((t.max_output_lag for t in self.terms), default=0)

    @property
    def max_input_lag(self) -> int:
        return max((t.max_input_lag for t in self.terms), default=0)

    @property
    def max_lag(self) -> int:
        return max(self.max_output_lag, self.max_input_lag)

    def term_strings(self) -> tuple[str, ...]:
        return tuple(str(t) for t in self.terms)


@dataclass(frozen=True)
class FreeRunResult:
    """Free-run output plus the divergence verdict.

    ``diverged_at`` is the first sample index at which the guard tripped
    (output is NaN from there on), or None for a clean run.
    """

    output: np.ndarray
    diverged_at: int | None = None

    @property
    def diverged(self) -> bool:
        return self.diverged_at is not None


@dataclass(frozen=True)
class StabilityVerdict:
    """Outcome of the constant-input stability probe.

    ``mean0``/``var0`` describe the post-settle response to an all-zero
    input, ``mean1``/``var1`` the response to an all-ones input.
    ``bias_mean_ok`` records whether the zero-input mean matched the model
    bias within ``sqrt(epsilon)``; a bounded response with an unexpected
    fixed point is still reported stable.
    """

    stable: bool
    mean0: float
    var0: float
    mean1: float
    var1: float
    diverged: bool
    bias_mean_ok: bool = True


def _term_evaluators(terms: Sequence[Term]):
    # pre-extract (is_output, lag, exponent) per factor to keep the
    # recursion loop lean
    return [
        [(f.signal is Signal.OUTPUT, f.lag, f.exponent) for f in t.factors]
        for t in terms
    ]


def simulate_free_run(model: Model, u, y_init=()) -> FreeRunResult:
    """Recursively simulate ``model`` along the input record ``u``.

    The first ``model.max_output_lag`` output samples are copied from
    ``y_init``; every later sample is computed from the model's own past
    outputs and the supplied inputs.  Divergence (non-finite value or
    magnitude beyond ``DIVERGENCE_LIMIT``) stops the recursion and is
    reported in the result rather than raised.
    """
    u = np.asarray(u, dtype=float)
    n_init = model.max_output_lag
    y_init = np.asarray(y_init, dtype=float)
    if len(y_init) != n_init:
        raise InsufficientDataError(
            f"model needs {n_init} initial output samples, got {len(y_init)}"
        )
    if len(u) < max(n_init, model.max_input_lag):
        raise InsufficientDataError("input record shorter than the model's lags")

    out = np.full(len(u), np.nan)
    out[:n_init] = y_init
    evaluators = _term_evaluators(model.terms)
    coefficients = model.coefficients
    bias = model.bias
    start = max(n_init, model.max_input_lag)
    out[n_init:start] = 0.0
    for t in range(start, len(u)):
        v = bias
        for coef, factors in zip(coefficients, evaluators):
            p = 1.0
            for is_y, lag, exp in factors:
                x = out[t - lag] if is_y else u[t - lag]
                p *= x**exp if exp > 1 else x
            v += coef * p
        if not math.isfinite(v) or abs(v) > DIVERGENCE_LIMIT:
            return FreeRunResult(out, diverged_at=t)
        out[t] = v
    return FreeRunResult(out)


def predict_one_step(model: Model, data: IoData) -> np.ndarray:
    """One-step-ahead predictions from measured history.

    Defined for ``t >= model.max_lag``; earlier entries are copied from the
    measured output so the returned array aligns with ``data.y``.
    """
    offset = model.max_lag
    if len(data) <= offset:
        raise InsufficientDataError("record shorter than the model's maximum lag")
    out = data.y.astype(float, copy=True)
    if model.terms:
        phi = term_columns(model.terms, data.u, data.y, offset)
        out[offset:] = phi @ np.asarray(model.coefficients) + model.bias
    else:
        out[offset:] = model.bias
    return out


def stability_probe(
    model: Model,
    epsilon: float = 1e-2,
    n_sim: int = 1000,
    n_settle: int = 200,
) -> StabilityVerdict:
    """Constant-input probe: the model must settle, not grow.

    Simulates from zero initial conditions under ``u == 0`` and ``u == 1``
    for ``n_sim`` samples; the first ``n_settle`` are discarded as
    transient.  Stable means both runs stay finite and the post-settle
    variance of each is at most ``epsilon``.  Divergence is a verdict, not
    an error.
    """
    if n_sim <= n_settle:
        raise ConfigError("n_sim must exceed n_settle")
    if n_settle < model.max_lag:
        raise ConfigError("n_settle must cover the model's maximum lag")
    stats = []
    diverged = False
    for level in (0.0, 1.0):
        u = np.full(n_sim, level)
        run = simulate_free_run(model, u, np.zeros(model.max_output_lag))
        if run.diverged:
            diverged = True
            stats.append((float("nan"), float("nan")))
            continue
        tail = run.output[n_settle:]
        stats.append((float(np.mean(tail)), float(np.var(tail))))
    (mean0, var0), (mean1, var1) = stats
    stable = (
        not diverged
        and var0 <= epsilon
        and var1 <= epsilon
    )
    bias_mean_ok = (not diverged) and abs(mean0 - model.bias) <= math.sqrt(epsilon)
    return StabilityVerdict(stable, mean0, var0, mean1, var1, diverged, bias_mean_ok)
