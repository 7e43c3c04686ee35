"""Calendar-month arithmetic used by every time-indexed container."""

from __future__ import annotations

import re
from typing import NamedTuple, Sequence

_MONTH_RE = re.compile(r"^(\d{4})-(\d{2})$")
_QUARTER_RE = re.compile(r"^(\d{4})-[Qq]([1-4])$")


class Month(NamedTuple):
    year: int
    month: int

    @property
    def ordinal(self) -> int:
        return self.year * 12 + (self.month - 1)

    @classmethod
    def from_ordinal(cls, k: int) -> "Month":
        return cls(k // 12, k % 12 + 1)

    def shift(self, k: int) -> "Month":
        return Month.from_ordinal(self.ordinal + k)

    @property
    def quarter(self) -> int:
        return (self.month - 1) // 3 + 1

    def __str__(self) -> str:
        return f"{self.year:04d}-{self.month:02d}"


def parse_month(text: str) -> Month:
    m = _MONTH_RE.match(text.strip())
    if not m:
        raise ValueError(f"bad month {text!r}, expected YYYY-MM")
    year, month = int(m.group(1)), int(m.group(2))
    if not 1 <= month <= 12:
        raise ValueError(f"bad month {text!r}, month out of range")
    return Month(year, month)


def parse_period(text: str) -> tuple[Month, str]:
    """Parse ``YYYY-MM`` or ``YYYY-Qn``.

    Quarters are represented by their first month. Returns the month and
    the frequency tag (``"monthly"`` or ``"quarterly"``).
    """
    m = _QUARTER_RE.match(text.strip())
    if m:
        return Month(int(m.group(1)), 3 * int(m.group(2)) - 2), "quarterly"
    return parse_month(text), "monthly"


def month_range(start: Month, stop: Month) -> tuple[Month, ...]:
    """Inclusive range of months."""
    return tuple(Month.from_ordinal(k) for k in range(start.ordinal, stop.ordinal + 1))


def check_contiguous(dates: Sequence[Month], step: int = 1) -> None:
    """Raise ValueError unless ``dates`` increase by exactly ``step`` months."""
    for prev, cur in zip(dates, dates[1:]):
        gap = cur.ordinal - prev.ordinal
        if gap <= 0:
            raise ValueError(f"dates not strictly increasing at {cur}")
        if gap != step:
            raise ValueError(f"gap in coverage between {prev} and {cur}")
