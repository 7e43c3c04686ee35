"""Descriptive statistics and lead/lag correlations."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SummaryRow:
    label: str
    mean: float
    sd: float
    n: int


@dataclass(frozen=True)
class CrossCorrelogram:
    """``values[k] = corr(a_t, b_{t+k})`` for ``k`` in ``[-max_lag, max_lag]``."""

    max_lag: int
    values: dict[int, float]
    convention: str = "value(k) = corr(A_t, B_t+k)"

    @property
    def lags(self) -> list[int]:
        return list(range(-self.max_lag, self.max_lag + 1))

    def as_array(self) -> np.ndarray:
        return np.array([self.values[k] for k in self.lags])


def summary(series, label: str = "") -> SummaryRow:
    """Mean and sample standard deviation (n - 1 denominator)."""
    x = np.asarray(getattr(series, "values", series), dtype=float)
    n = x.size
    if n < 2:
        raise ValueError("summary needs at least 2 observations")
    mean = float(np.mean(x))
    sd = float(np.sqrt(np.sum((x - mean) ** 2) / (n - 1)))
    return SummaryRow(label, mean, sd, n)


def pearson(a, b) -> float:
    a = np.asarray(getattr(a, "values", a), dtype=float)
    b = np.asarray(getattr(b, "values", b), dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"length mismatch: {a.shape} vs {b.shape}")
    if a.size < 3:
        raise ValueError("pearson needs at least 3 observations")
    da = a - a.mean()
    db = b - b.mean()
    saa = float(np.dot(da, da))
    sbb = float(np.dot(db, db))
    # tiny relative spread is rounding noise around a constant
    if saa <= 1e-28 * max(1.0, float(np.dot(a, a))) or sbb <= 1e-28 * max(1.0, float(np.dot(b, b))):
        raise ValueError("constant series: correlation undefined")
    r = float(np.dot(da, db)) / math.sqrt(saa * sbb)
    return min(1.0, max(-1.0, r))


def cross_correlogram(a, b, max_lag: int = 12) -> CrossCorrelogram:
    """Correlate ``a_t`` with ``b_{t+k}`` for every lag, each over its own overlap."""
    a = np.asarray(getattr(a, "values", a), dtype=float)
    b = np.asarray(getattr(b, "values", b), dtype=float)
    if a.shape != b.shape:
        raise ValueError("series must share the same dates")
    if max_lag < 0:
        raise ValueError("max_lag must be nonnegative")
    T = a.size
    if T - max_lag < 3:
        raise ValueError(f"insufficient overlap: {T} observations for max lag {max_lag}")
    values = {}
    for k in range(-max_lag, max_lag + 1):
        if k >= 0:
            values[k] = pearson(a[: T - k], b[k:])
        else:
            values[k] = pearson(a[-k:], b[: T + k])
    return CrossCorrelogram(max_lag, values)
