"""Per-period disagreement metrics and their dimension averages."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .ingest import AGENTS, QUESTIONS, ShareVector, SurveyPanel, _emit, _frozen
from .months import Month, check_contiguous

METRICS = ("D", "DISP")
_CLAMP = 1e-12


def _as_shares(share) -> np.ndarray:
    if isinstance(share, ShareVector):
        return np.array(share.values)
    return np.asarray(share, dtype=float)


def disp(share) -> float:
    """Standard deviation of the balance, ``sqrt(P + M - (P - M)**2)``."""
    v = _as_shares(share)
    if v.shape != (3,):
        raise ValueError(f"DISP needs exactly 3 categories, got {v.size}")
    p, m = v[0], v[2]
    rad = p + m - (p - m) ** 2
    if rad < 0:
        if rad < -_CLAMP:
            raise ValueError(f"negative DISP radicand {rad!r}; shares are not fractions")
        rad = 0.0
    return math.sqrt(rad)


def discrepancy(share) -> float:
    """Geometric agreement measure on the simplex.

    One minus the distance from the share point to the barycenter, divided
    by the barycenter-to-vertex distance ``sqrt((N - 1) / N)``. Equals 1 at
    the barycenter and 0 at any vertex.
    """
    v = _as_shares(share)
    if v.ndim != 1 or v.size < 2:
        raise ValueError(f"discrepancy needs at least 2 categories, got {v.size}")
    n = v.size
    dist = math.sqrt(float(np.sum((v - 1.0 / n) ** 2)))
    d = 1.0 - dist / math.sqrt((n - 1) / n)
    if d < 0:
        if d < -_CLAMP:
            raise ValueError("share lies outside the simplex")
        d = 0.0
    elif d > 1:
        d = 1.0
    return d


def disp_many(shares: np.ndarray) -> np.ndarray:
    """Row-wise :func:`disp` for a (T, 3) array."""
    s = np.asarray(shares, dtype=float)
    if s.ndim != 2 or s.shape[1] != 3:
        raise ValueError("DISP needs exactly 3 categories")
    p, m = s[:, 0], s[:, 2]
    rad = p + m - (p - m) ** 2
    if np.any(rad < -_CLAMP):
        raise ValueError("negative DISP radicand; shares are not fractions")
    return np.sqrt(np.clip(rad, 0.0, None))


def discrepancy_many(shares: np.ndarray) -> np.ndarray:
    """Row-wise :func:`discrepancy` for a (T, N) array."""
    s = np.asarray(shares, dtype=float)
    if s.ndim != 2 or s.shape[1] < 2:
        raise ValueError("discrepancy needs at least 2 categories")
    n = s.shape[1]
    dist = np.sqrt(np.sum((s - 1.0 / n) ** 2, axis=1))
    d = 1.0 - dist / math.sqrt((n - 1) / n)
    if np.any(d < -_CLAMP):
        raise ValueError("share lies outside the simplex")
    return np.clip(d, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class IndicatorSeries:
    metric: str
    country: str
    agent: str
    question: str
    dates: tuple[Month, ...]
    values: np.ndarray

    def __post_init__(self):
        if self.metric not in METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")
        dates = tuple(Month(*d) for d in self.dates)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(dates),):
            raise ValueError("values must match dates")
        if np.any(values < 0) or np.any(values > 1):
            raise ValueError(f"{self.metric} values must lie in [0, 1]")
        check_contiguous(dates)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", _frozen(values))

    @property
    def label(self) -> str:
        return f"{self.metric}_{self.question}"

    @property
    def series(self) -> dict[Month, float]:
        return dict(zip(self.dates, self.values.tolist()))


@dataclass(frozen=True, eq=False)
class AggregateDisagreement:
    """Pointwise mean of the activity, prices and employment indices."""

    agent: str
    components: tuple[IndicatorSeries, ...]
    values: np.ndarray

    @property
    def dates(self) -> tuple[Month, ...]:
        return self.components[0].dates

    @property
    def country(self) -> str:
        return self.components[0].country

    @property
    def metric(self) -> str:
        return self.components[0].metric

    @property
    def label(self) -> str:
        return {"business": "DB", "consumer": "DC"}[self.agent]

    @property
    def series(self) -> dict[Month, float]:
        return dict(zip(self.dates, self.values.tolist()))


def indicator_series(panel: SurveyPanel, metric: str = "D") -> IndicatorSeries:
    if metric == "D":
        values = discrepancy_many(panel.shares)
    elif metric == "DISP":
        if panel.n_categories != 3:
            raise ValueError(
                f"DISP needs 3 categories but {'/'.join(panel.key)} has "
                f"{panel.n_categories}; collapse consumer categories first"
            )
        values = disp_many(panel.shares)
    else:
        raise ValueError(f"unknown metric {metric!r}")
    return IndicatorSeries(metric, panel.country, panel.agent, panel.question, panel.dates, values)


def aggregate(components: Sequence[IndicatorSeries]) -> AggregateDisagreement:
    """Average three same-agent, same-metric indicator series month by month."""
    comps = tuple(components)
    if len(comps) != 3:
        raise ValueError(f"aggregate needs exactly 3 series, got {len(comps)}")
    first = comps[0]
    for c in comps[1:]:
        if (c.agent, c.metric, c.country) != (first.agent, first.metric, first.country):
            raise ValueError("cannot aggregate mixed agents, metrics or countries")
        if c.dates != first.dates:
            raise ValueError(f"mismatched ranges: {first.dates[0]}..{first.dates[-1]} vs {c.dates[0]}..{c.dates[-1]}")
    if len({c.question for c in comps}) != 3:
        raise ValueError("aggregate needs three distinct questions")
    comps = tuple(sorted(comps, key=lambda c: QUESTIONS.index(c.question)))
    values = (comps[0].values + comps[1].values + comps[2].values) / 3.0
    return AggregateDisagreement(first.agent, comps, _frozen(values))


def write_indicator_csv(series, dest) -> None:
    """``date,country,agent,question,metric,value``; aggregates use question ``aggregate``."""
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "country", "agent", "question", "metric", "value"])
    items = series if isinstance(series, (list, tuple)) else [series]
    for s in items:
        question = s.question if isinstance(s, IndicatorSeries) else "aggregate"
        for d, v in zip(s.dates, s.values):
            w.writerow([str(d), s.country, s.agent, question, s.metric, repr(float(v))])
    _emit(buf.getvalue(), dest)


__all__ = [
    "AGENTS",
    "METRICS",
    "AggregateDisagreement",
    "IndicatorSeries",
    "aggregate",
    "discrepancy",
    "discrepancy_many",
    "disp",
    "disp_many",
    "indicator_series",
    "write_indicator_csv",
]
