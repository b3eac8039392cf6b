"""Correlation-based residual tests for nonlinear model validation.

For an unbiased model the residuals should be unpredictable from themselves,
from the input, and from simple nonlinear transforms of both.  Five
normalized correlation functions are computed, each with the usual
``+/- 1.96 / sqrt(L)`` confidence band:

* ``phi_ee``    - residual autocorrelation, lags 0..max_lag (lag 0 is 1 by
  construction and excluded from the pass check);
* ``phi_ue``    - input/residual cross-correlation, lags -max_lag..max_lag;
* ``phi_e_eu``  - residual against the lagged residual*input product,
  lags 0..max_lag;
* ``phi_u2e``   - mean-removed squared input against the residual,
  lags -max_lag..max_lag;
* ``phi_u2e2``  - mean-removed squared input against the mean-removed
  squared residual, lags -max_lag..max_lag.

All estimators use the biased (1/L) normalization, which keeps every value
in [-1, 1].
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .errors import DataError

__all__ = ["CorrelationTest", "ValidationReport", "residual_tests"]


@dataclass(frozen=True)
class CorrelationTest:
    """One correlation function with its confidence band and verdict."""

    name: str
    lags: np.ndarray
    values: np.ndarray
    bound: float
    fraction_inside: float
    passed: bool
    degenerate: bool = False


@dataclass(frozen=True)
class ValidationReport:
    """The five-test suite over one residual record."""

    tests: tuple[CorrelationTest, ...]
    residual_variance: float
    n_samples: int

    @property
    def passed(self) -> bool:
        return all(t.passed for t in self.tests)

    def __getitem__(self, name: str) -> CorrelationTest:
        for t in self.tests:
            if t.name == name:
                return t
        raise KeyError(name)

    def rows(self) -> Iterator[tuple[str, int, float, float, float]]:
        """Plot-ready rows: (test, lag, value, lower bound, upper bound)."""
        for t in self.tests:
            for lag, value in zip(t.lags, t.values):
                yield (t.name, int(lag), float(value), -t.bound, t.bound)


def _cross_correlation(a: np.ndarray, b: np.ndarray, max_lag: int) -> np.ndarray:
    """Biased normalized cross-correlation for lags -max_lag..max_lag.

    Value at lag ``tau`` estimates ``E[a(t) b(t+tau)]`` normalized by the
    zero-lag energies, so a spike at ``tau = d > 0`` means ``b`` repeats
    ``a`` delayed by ``d`` samples.
    """
    L = len(a)
    denom = np.sqrt(float(a @ a) * float(b @ b))
    if denom == 0.0:
        return np.zeros(2 * max_lag + 1)
    # np.correlate(b, a, "full")[L-1+tau] = sum_t a(t) b(t+tau)
    full = np.correlate(b, a, mode="full")
    center = L - 1
    return full[center - max_lag : center + max_lag + 1] / denom


def _make_test(
    name: str,
    a: np.ndarray,
    b: np.ndarray,
    max_lag: int,
    bound: float,
    two_sided: bool,
    skip_zero_lag: bool = False,
) -> CorrelationTest:
    degenerate = float(a @ a) == 0.0 or float(b @ b) == 0.0
    values = _cross_correlation(a, b, max_lag)
    lags = np.arange(-max_lag, max_lag + 1)
    if not two_sided:
        keep = lags >= 0
        lags, values = lags[keep], values[keep]
    check = np.ones(len(lags), dtype=bool)
    if skip_zero_lag:
        check &= lags != 0
    inside = np.abs(values[check]) <= bound
    fraction = float(np.mean(inside)) if inside.size else 1.0
    passed = degenerate or bool(np.all(inside))
    return CorrelationTest(
        name, lags, values, bound, fraction, passed, degenerate
    )


def residual_tests(residuals, u, max_lag: int | None = None) -> ValidationReport:
    """Run the five-test suite on aligned residual and input records.

    ``max_lag`` defaults to ``min(25, L // 4)``.  Zero-variance residuals
    are flagged degenerate instead of dividing by zero.
    """
    residuals = np.asarray(residuals, dtype=float)
    u = np.asarray(u, dtype=float)
    if residuals.ndim != 1 or u.ndim != 1 or len(residuals) != len(u):
        raise DataError("residuals and input must be aligned 1-D arrays")
    L = len(residuals)
    if L < 4:
        raise DataError("need at least 4 samples for residual tests")
    if max_lag is None:
        max_lag = min(25, L // 4)
    if not (1 <= max_lag < L):
        raise DataError(f"max_lag {max_lag} out of range for {L} samples")

    bound = 1.96 / np.sqrt(L)
    e = residuals - residuals.mean()
    uc = u - u.mean()
    eu = residuals * u
    euc = eu - eu.mean()
    u2 = u**2
    u2c = u2 - u2.mean()
    e2 = residuals**2
    e2c = e2 - e2.mean()

    tests = (
        _make_test("phi_ee", e, e, max_lag, bound, two_sided=False, skip_zero_lag=True),
        _make_test("phi_ue", uc, e, max_lag, bound, two_sided=True),
        # residual against the delayed residual*input product: value at
        # tau >= 0 estimates E[e(t) (e u)(t - tau)]
        _make_test("phi_e_eu", euc, e, max_lag, bound, two_sided=False),
        _make_test("phi_u2e", u2c, e, max_lag, bound, two_sided=True),
        _make_test("phi_u2e2", u2c, e2c, max_lag, bound, two_sided=True),
    )
    return ValidationReport(tests, float(np.var(residuals)), L)
