"""Survey share and macro series containers, CSV I/O and synthetic fixtures.

Shares are always held as fractions in [0, 1]. Percent inputs are converted
once, at parse time.
"""

from __future__ import annotations

import csv
import io
import math
import os
from dataclasses import dataclass, field
from pathlib import Path
from typing import IO, Iterable, Sequence

import numpy as np

from .months import Month, check_contiguous, month_range, parse_month, parse_period

AGENTS = ("business", "consumer")
QUESTIONS = ("activity", "prices", "employment")
FREQUENCIES = ("monthly", "quarterly")

SHARE_SUM_TOL = 1e-9
DEFAULT_RENORM_TOL = 0.02


class IngestError(ValueError):
    """Invalid input data. ``line`` is the 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None, source: str | None = None):
        self.line = line
        self.source = source
        prefix = ""
        if source:
            prefix += f"{source}: "
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


def _frozen(a) -> np.ndarray:
    out = np.array(a, dtype=float)
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# share vectors


@dataclass(frozen=True)
class ShareVector:
    """Category proportions (P, E, M for three categories)."""

    values: tuple[float, ...]

    def __post_init__(self):
        vals = tuple(float(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if len(vals) < 2:
            raise ValueError(f"share vector needs at least 2 categories, got {len(vals)}")
        if any(not math.isfinite(v) for v in vals):
            raise ValueError("share vector has non-finite entries")
        if any(v < 0 for v in vals):
            raise ValueError(f"negative share in {vals}")
        total = math.fsum(vals)
        if abs(total - 1.0) > SHARE_SUM_TOL:
            raise ValueError(f"shares sum to {total!r}, not 1")

    def __len__(self) -> int:
        return len(self.values)

    def __iter__(self):
        return iter(self.values)

    def __getitem__(self, i):
        return self.values[i]

    @property
    def n(self) -> int:
        return len(self.values)

    def as_array(self) -> np.ndarray:
        return np.array(self.values)


def renormalize(shares: Sequence[float], tol: float = DEFAULT_RENORM_TOL) -> ShareVector:
    """Rescale raw nonnegative shares to sum to one.

    Vectors already summing to one (up to float rounding) are returned
    unchanged so that renormalization is idempotent.
    """
    vals = [float(v) for v in shares]
    if any(not math.isfinite(v) for v in vals):
        raise ValueError("non-finite share")
    if any(v < 0 for v in vals):
        raise ValueError(f"negative share in {tuple(vals)}")
    total = math.fsum(vals)
    if abs(total - 1.0) <= 1e-12:
        return ShareVector(tuple(vals))
    if abs(total - 1.0) > max(tol, SHARE_SUM_TOL):
        raise ValueError(f"sum {total:g} outside tolerance {tol:g}")
    return ShareVector(tuple(v / total for v in vals))


def collapse_consumer_categories(raw: ShareVector | Sequence[float]) -> ShareVector:
    """Map the six consumer replies onto (P, E, M).

    Input order is (strong positive, positive, same, negative, strong
    negative, don't know). Positives go to P, negatives to M, and the
    "same" and "don't know" shares to E.
    """
    v = raw.values if isinstance(raw, ShareVector) else tuple(float(x) for x in raw)
    if len(v) != 6:
        raise ValueError(f"consumer collapse needs 6 categories, got {len(v)}")
    sp, pos, same, neg, sn, dk = v
    return ShareVector((sp + pos, same + dk, neg + sn))


# ---------------------------------------------------------------------------
# panels


@dataclass(frozen=True, eq=False)
class SurveyPanel:
    """Monthly share vectors for one (country, agent, question)."""

    country: str
    agent: str
    question: str
    dates: tuple[Month, ...]
    shares: np.ndarray  # (T, N)

    def __post_init__(self):
        if self.agent not in AGENTS:
            raise ValueError(f"unknown agent {self.agent!r}")
        if self.question not in QUESTIONS:
            raise ValueError(f"unknown question {self.question!r}")
        dates = tuple(Month(*d) for d in self.dates)
        shares = np.asarray(self.shares, dtype=float)
        if shares.ndim != 2 or shares.shape[0] != len(dates):
            raise ValueError("shares must be a (T, N) array matching dates")
        if len(dates) == 0:
            raise ValueError("empty panel")
        if shares.shape[1] < 2:
            raise ValueError("need at least 2 categories")
        if np.any(shares < 0) or not np.all(np.isfinite(shares)):
            raise ValueError("panel holds negative or non-finite shares")
        if np.any(np.abs(shares.sum(axis=1) - 1.0) > SHARE_SUM_TOL):
            raise ValueError("panel rows must sum to 1")
        check_contiguous(dates)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "shares", _frozen(shares))

    @property
    def n_categories(self) -> int:
        return self.shares.shape[1]

    @property
    def key(self) -> tuple[str, str, str]:
        return (self.country, self.agent, self.question)

    def __len__(self) -> int:
        return len(self.dates)

    def __getitem__(self, month: Month) -> ShareVector:
        i = Month(*month).ordinal - self.dates[0].ordinal
        if not 0 <= i < len(self.dates):
            raise KeyError(month)
        return ShareVector(tuple(self.shares[i]))

    @property
    def series(self) -> dict[Month, ShareVector]:
        return {d: ShareVector(tuple(row)) for d, row in zip(self.dates, self.shares)}

    def __eq__(self, other):
        if not isinstance(other, SurveyPanel):
            return NotImplemented
        return (
            self.key == other.key
            and self.dates == other.dates
            and self.shares.shape == other.shares.shape
            and bool(np.array_equal(self.shares, other.shares))
        )

    def __hash__(self):
        return hash((self.key, self.dates))


def collapse_panel(panel: SurveyPanel) -> SurveyPanel:
    rows = [collapse_consumer_categories(tuple(r)).values for r in panel.shares]
    return SurveyPanel(panel.country, panel.agent, panel.question, panel.dates, np.array(rows))


@dataclass(frozen=True, eq=False)
class MacroSeries:
    """Growth rates (percent, year on year). Quarterly dates are first months."""

    country: str
    dates: tuple[Month, ...]
    values: np.ndarray
    frequency: str = "monthly"

    def __post_init__(self):
        if self.frequency not in FREQUENCIES:
            raise ValueError(f"unknown frequency {self.frequency!r}")
        dates = tuple(Month(*d) for d in self.dates)
        values = np.asarray(self.values, dtype=float)
        if values.shape != (len(dates),):
            raise ValueError("values must match dates")
        if not np.all(np.isfinite(values)):
            raise ValueError("non-finite growth value")
        if self.frequency == "quarterly" and any((d.month - 1) % 3 for d in dates):
            raise ValueError("quarterly dates must be quarter start months")
        check_contiguous(dates, 3 if self.frequency == "quarterly" else 1)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "values", _frozen(values))

    @property
    def series(self) -> dict[Month, float]:
        return dict(zip(self.dates, self.values.tolist()))

    def __len__(self) -> int:
        return len(self.dates)

    def __eq__(self, other):
        if not isinstance(other, MacroSeries):
            return NotImplemented
        return (
            (self.country, self.frequency, self.dates)
            == (other.country, other.frequency, other.dates)
            and bool(np.array_equal(self.values, other.values))
        )

    def __hash__(self):
        return hash((self.country, self.frequency, self.dates))


@dataclass(frozen=True, eq=False)
class AlignedMatrix:
    """T x 2 data for one bivariate VAR; disagreement is column 0."""

    dates: tuple[Month, ...]
    columns: tuple[str, str]
    data: np.ndarray

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim != 2 or data.shape[0] != len(self.dates):
            raise ValueError("data must be (T, n) and match dates")
        if data.shape[1] != len(self.columns):
            raise ValueError("column labels do not match data width")
        if not np.all(np.isfinite(data)):
            raise ValueError("aligned matrix has missing cells")
        object.__setattr__(self, "dates", tuple(Month(*d) for d in self.dates))
        object.__setattr__(self, "columns", tuple(self.columns))
        object.__setattr__(self, "data", _frozen(data))

    @property
    def T(self) -> int:
        return self.data.shape[0]


# ---------------------------------------------------------------------------
# CSV


@dataclass(frozen=True)
class SurveySchema:
    """Column mapping for survey CSVs.

    ``categories=None`` takes every column after the four key columns, in
    header order. ``unit`` is ``"fraction"`` or ``"percent"``.
    """

    date: str = "date"
    country: str = "country"
    agent: str = "agent"
    question: str = "question"
    categories: tuple[str, ...] | None = None
    unit: str = "fraction"
    tol: float = DEFAULT_RENORM_TOL

    def __post_init__(self):
        if self.unit not in ("fraction", "percent"):
            raise ValueError(f"unit must be 'fraction' or 'percent', got {self.unit!r}")


def _read_text(source) -> tuple[str, str | None]:
    if isinstance(source, (str, os.PathLike)):
        path = Path(source)
        return path.read_text(encoding="utf-8"), str(path)
    if isinstance(source, (bytes, bytearray)):
        return bytes(source).decode("utf-8"), None
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return data, getattr(source, "name", None)


def _float_cell(text: str, line: int, what: str, src) -> float:
    try:
        x = float(text)
    except ValueError:
        raise IngestError(f"malformed {what} {text!r}", line, src) from None
    if not math.isfinite(x):
        raise IngestError(f"non-finite {what} {text!r}", line, src)
    return x


def parse_survey_csv(source, schema: SurveySchema | None = None) -> list[SurveyPanel]:
    """Parse a survey share table into panels, one per (country, agent, question).

    ``source`` may be a path, raw bytes, or a binary/text stream.
    """
    schema = schema or SurveySchema()
    text, src = _read_text(source)
    reader = csv.reader(io.StringIO(text, newline=""))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise IngestError("empty file", 1, src) from None
    keys = (schema.date, schema.country, schema.agent, schema.question)
    for k in keys:
        if k not in header:
            raise IngestError(f"missing column {k!r}", 1, src)
    cats = schema.categories
    if cats is None:
        cats = tuple(h for h in header if h not in keys)
    missing = [c for c in cats if c not in header]
    if missing:
        raise IngestError(f"missing category columns {missing}", 1, src)
    if len(cats) < 2:
        raise IngestError("need at least 2 category columns", 1, src)
    idx = {h: i for i, h in enumerate(header)}
    scale = 100.0 if schema.unit == "percent" else 1.0

    rows: dict[tuple[str, str, str], dict[Month, tuple[float, ...]]] = {}
    for row in reader:
        line = reader.line_num
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise IngestError(f"malformed row: expected {len(header)} fields, got {len(row)}", line, src)
        try:
            month = parse_month(row[idx[schema.date]])
        except ValueError as exc:
            raise IngestError(f"malformed row: {exc}", line, src) from None
        country = row[idx[schema.country]].strip()
        agent = row[idx[schema.agent]].strip()
        question = row[idx[schema.question]].strip()
        if not country:
            raise IngestError("malformed row: empty country", line, src)
        if agent not in AGENTS:
            raise IngestError(f"malformed row: unknown agent {agent!r}", line, src)
        if question not in QUESTIONS:
            raise IngestError(f"malformed row: unknown question {question!r}", line, src)
        raw = [_float_cell(row[idx[c]], line, "share", src) for c in cats]
        if any(v < 0 for v in raw):
            raise IngestError(f"negative share at line {line}", None, src)
        try:
            sv = renormalize([v / scale for v in raw], schema.tol)
        except ValueError as exc:
            raise IngestError(str(exc), line, src) from None
        series = rows.setdefault((country, agent, question), {})
        if month in series:
            raise IngestError(f"duplicate key ({month}, {country}, {agent}, {question})", line, src)
        series[month] = sv.values

    panels = []
    for key in sorted(rows):
        series = rows[key]
        dates = sorted(series)
        try:
            check_contiguous(dates)
        except ValueError as exc:
            raise IngestError(f"gap in monthly coverage for {'/'.join(key)}: {exc}", None, src) from None
        panels.append(SurveyPanel(*key, tuple(dates), np.array([series[d] for d in dates])))
    return panels


def write_survey_csv(panels: Iterable[SurveyPanel], dest, categories: Sequence[str] | None = None) -> None:
    """Write panels as fractions. ``dest`` is a path or text stream."""
    panels = list(panels)
    if not panels:
        raise ValueError("no panels to write")
    n = panels[0].n_categories
    if any(p.n_categories != n for p in panels):
        raise ValueError("cannot mix category counts in one file")
    categories = tuple(categories) if categories else tuple(f"c{i + 1}" for i in range(n))
    if len(categories) != n:
        raise ValueError("category names do not match panel width")
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "country", "agent", "question", *categories])
    for p in panels:
        for d, r in zip(p.dates, p.shares):
            w.writerow([str(d), p.country, p.agent, p.question, *(repr(float(v)) for v in r)])
    _emit(buf.getvalue(), dest)


def parse_macro_csv(source) -> dict[str, MacroSeries]:
    """Parse ``date,country,gdp_growth`` rows into one series per country."""
    text, src = _read_text(source)
    reader = csv.DictReader(io.StringIO(text, newline=""))
    if reader.fieldnames is None:
        raise IngestError("empty file", 1, src)
    for col in ("date", "country", "gdp_growth"):
        if col not in [f.strip() for f in reader.fieldnames]:
            raise IngestError(f"missing column {col!r}", 1, src)
    reader.fieldnames = [f.strip() for f in reader.fieldnames]
    data: dict[str, dict[Month, float]] = {}
    freq: dict[str, str] = {}
    for row in reader:
        line = reader.line_num
        if None in row or any(v is None for v in row.values()):
            raise IngestError("malformed row: wrong field count", line, src)
        try:
            month, f = parse_period(row["date"])
        except ValueError as exc:
            raise IngestError(f"malformed row: {exc}", line, src) from None
        country = row["country"].strip()
        if not country:
            raise IngestError("malformed row: empty country", line, src)
        if freq.setdefault(country, f) != f:
            raise IngestError(f"mixed frequencies for {country}", line, src)
        value = _float_cell(row["gdp_growth"], line, "growth value", src)
        series = data.setdefault(country, {})
        if month in series:
            raise IngestError(f"duplicate key ({row['date'].strip()}, {country})", line, src)
        series[month] = value
    out = {}
    for country in sorted(data):
        dates = sorted(data[country])
        try:
            out[country] = MacroSeries(
                country, tuple(dates), np.array([data[country][d] for d in dates]), freq[country]
            )
        except ValueError as exc:
            raise IngestError(f"{country}: {exc}", None, src) from None
    return out


def write_macro_csv(series: Iterable[MacroSeries], dest) -> None:
    buf = io.StringIO(newline="")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "country", "gdp_growth"])
    for s in series:
        for d, v in zip(s.dates, s.values):
            label = f"{d.year:04d}-Q{d.quarter}" if s.frequency == "quarterly" else str(d)
            w.writerow([label, s.country, repr(float(v))])
    _emit(buf.getvalue(), dest)


def _emit(text: str, dest) -> None:
    if isinstance(dest, (str, os.PathLike)):
        with open(dest, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        dest.write(text)


# ---------------------------------------------------------------------------
# alignment


def align_frequency(macro: MacroSeries, method: str = "step") -> MacroSeries:
    """Convert a quarterly series to monthly.

    ``step`` repeats each quarter over its three months. ``linear`` pins
    each quarter at its middle month, interpolates in between, and holds the
    end values flat out to the first and last month of the span.
    """
    if macro.frequency == "monthly":
        raise ValueError("already monthly")
    if method not in ("step", "linear"):
        raise ValueError(f"unknown alignment method {method!r}")
    q = len(macro.dates)
    if q < 1 or (method == "linear" and q < 2):
        raise ValueError(f"{method} alignment needs at least {2 if method == 'linear' else 1} quarters")
    months = month_range(macro.dates[0], macro.dates[-1].shift(2))
    if method == "step":
        values = np.repeat(macro.values, 3)
    else:
        anchors = np.array([d.ordinal + 1 for d in macro.dates], dtype=float)
        grid = np.array([m.ordinal for m in months], dtype=float)
        values = np.interp(grid, anchors, macro.values)
    return MacroSeries(macro.country, months, values, "monthly")


def join_for_var(disagreement, growth: MacroSeries, columns: tuple[str, str] | None = None) -> AlignedMatrix:
    """Intersect a disagreement series with monthly growth.

    ``disagreement`` is anything with ``dates`` and ``values`` (an
    IndicatorSeries or AggregateDisagreement).
    """
    if growth.frequency != "monthly":
        raise ValueError("growth series must be monthly; align it first")
    d_dates = tuple(disagreement.dates)
    check_contiguous(d_dates)
    lo = max(d_dates[0].ordinal, growth.dates[0].ordinal)
    hi = min(d_dates[-1].ordinal, growth.dates[-1].ordinal)
    if hi < lo:
        raise ValueError("empty overlap")
    d0 = d_dates[0].ordinal
    g0 = growth.dates[0].ordinal
    dv = np.asarray(disagreement.values, dtype=float)[lo - d0 : hi - d0 + 1]
    gv = growth.values[lo - g0 : hi - g0 + 1]
    if columns is None:
        columns = (getattr(disagreement, "label", "disagreement"), "gdp_growth")
    return AlignedMatrix(
        tuple(Month.from_ordinal(k) for k in range(lo, hi + 1)), columns, np.column_stack([dv, gv])
    )


# ---------------------------------------------------------------------------
# synthetic fixtures


@dataclass(frozen=True)
class SimulatedPanel:
    panel: SurveyPanel
    latent: np.ndarray = field(repr=False)  # (T, N) latent mean compositions


def _softmax(z: np.ndarray) -> np.ndarray:
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def simulate_share_panel(
    seed: int,
    T: int,
    N: int = 3,
    persistence: float = 0.8,
    concentration: float = 50.0,
    *,
    volatility: float = 0.5,
    center: Sequence[float] | None = None,
    start: Month = Month(2005, 5),
    country: str = "SIM",
    agent: str = "business",
    question: str = "activity",
    return_latent: bool = False,
):
    """Seeded share panel from a logistic-normal AR(1) with Dirichlet noise.

    The latent log-composition follows
    ``z_t = c + persistence * (z_{t-1} - c) + volatility * e_t`` and each
    month's shares are drawn from ``Dirichlet(concentration * softmax(z_t))``.
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    if N < 2:
        raise ValueError("N must be >= 2")
    if not 0 <= persistence < 1:
        raise ValueError("persistence must lie in [0, 1)")
    if not concentration > 0:
        raise ValueError("concentration must be positive")
    if volatility < 0:
        raise ValueError("volatility must be nonnegative")
    rng = np.random.default_rng(seed)
    if center is None:
        c = np.zeros(N)
    else:
        c = np.log(np.asarray(center, dtype=float))
        if c.shape != (N,) or not np.all(np.isfinite(c)):
            raise ValueError("center must be N positive shares")
    sd0 = volatility / math.sqrt(1 - persistence**2)
    z = np.empty((T, N))
    z[0] = c + sd0 * rng.standard_normal(N)
    eps = rng.standard_normal((T, N))
    for t in range(1, T):
        z[t] = c + persistence * (z[t - 1] - c) + volatility * eps[t]
    latent = _softmax(z)
    alpha = concentration * latent
    shares = np.empty((T, N))
    for t in range(T):
        g = rng.standard_gamma(alpha[t])
        s = g.sum()
        # an all-underflow draw collapses onto the latent mean
        shares[t] = g / s if s > 0 else latent[t]
    dates = tuple(start.shift(k) for k in range(T))
    panel = SurveyPanel(country, agent, question, dates, shares)
    if return_latent:
        return SimulatedPanel(panel, _frozen(latent))
    return panel
