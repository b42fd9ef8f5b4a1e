"""Calendar-aligned daily series: container, smoothing, slicing, summaries.

A DailySeries is a start date plus one real value per consecutive day, so
index ``i`` always means ``start_date + i`` days and there are no gaps by
construction.  Everything downstream (changepoint detection, regression,
the hypothesis battery) consumes this type.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from .errors import EmptySeriesError, GapError, ParameterError, RangeError

__all__ = [
    "DailySeries",
    "PeriodSpec",
    "SeriesSummary",
    "moving_average",
    "slice_periods",
    "summarize",
    "series_to_csv",
    "series_from_csv",
]


@dataclass(frozen=True)
class DailySeries:
    """A date-indexed real-valued series with a contiguous calendar."""

    start_date: date
    values: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        if arr.ndim != 1:
            raise ParameterError("series values must be one-dimensional")
        object.__setattr__(self, "values", arr)

    def __len__(self) -> int:
        return len(self.values)

    @property
    def end_date(self) -> date:
        return self.start_date + timedelta(days=len(self.values) - 1)

    def date_at(self, index: int) -> date:
        if not 0 <= index < len(self.values):
            raise RangeError(f"index {index} outside series of length {len(self)}")
        return self.start_date + timedelta(days=index)

    def index_of(self, day: date) -> int:
        offset = (day - self.start_date).days
        if not 0 <= offset < len(self.values):
            raise RangeError(f"{day.isoformat()} outside series span "
                             f"{self.start_date.isoformat()}..{self.end_date.isoformat()}")
        return offset

    def dates(self) -> list[date]:
        return [self.start_date + timedelta(days=i) for i in range(len(self.values))]

    def slice(self, start: int, stop: int) -> "DailySeries":
        """Sub-series covering indices [start, stop)."""
        if not (0 <= start <= stop <= len(self.values)):
            raise RangeError(f"slice [{start}, {stop}) outside series of length {len(self)}")
        return DailySeries(self.start_date + timedelta(days=start),
                           self.values[start:stop].copy())

    def to_json_dict(self) -> dict:
        return {"start_date": self.start_date.isoformat(),
                "values": [float(v) for v in self.values]}

    @classmethod
    def from_json_dict(cls, obj: dict) -> "DailySeries":
        return cls(date.fromisoformat(obj["start_date"]),
                   np.asarray(obj["values"], dtype=float))


@dataclass(frozen=True)
class PeriodSpec:
    """Ordered period boundaries; k boundary dates define k+1 periods.

    A boundary date is the first day of the period it opens, so the day
    before each boundary closes the preceding period.
    """

    boundaries: tuple[date, ...]
    labels: tuple[str, ...] = field(default=())

    def __post_init__(self):
        bounds = tuple(self.boundaries)
        object.__setattr__(self, "boundaries", bounds)
        for a, b in zip(bounds, bounds[1:]):
            if a >= b:
                raise ParameterError("period boundaries must be strictly increasing")
        labels = tuple(self.labels) if self.labels else tuple(
            f"period{i + 1}" for i in range(len(bounds) + 1))
        if len(labels) != len(bounds) + 1:
            raise ParameterError(
                f"{len(bounds)} boundaries need {len(bounds) + 1} labels, got {len(labels)}")
        object.__setattr__(self, "labels", labels)


@dataclass(frozen=True)
class SeriesSummary:
    n: int
    mean: float
    sd: float | None
    median: float


def moving_average(s: DailySeries, window: int) -> DailySeries:
    """Trailing mean over the previous ``window`` days.

    Output value at index i is the mean of the inputs at indices
    max(0, i-window+1)..i; the warm-up prefix therefore averages over the
    shorter available window, keeping output and input the same length.
    The window trails rather than centers so that smoothed series feeding
    a forecast never look at future observations.
    """
    n = len(s)
    if window < 1 or window > n:
        raise ParameterError(f"window must be in 1..{n}, got {window}")
    c = np.concatenate(([0.0], np.cumsum(s.values)))
    idx = np.arange(n)
    lo = np.maximum(idx - window + 1, 0)
    out = (c[idx + 1] - c[lo]) / (idx + 1 - lo)
    return DailySeries(s.start_date, out)


def slice_periods(s: DailySeries, spec: PeriodSpec) -> list[DailySeries]:
    """Split a series at the period boundaries.

    Each boundary date starts the later period; segments concatenate back
    to the original series.  A boundary at or before the start date would
    leave an empty first segment and is rejected.
    """
    cuts = []
    for b in spec.boundaries:
        offset = (b - s.start_date).days
        if offset <= 0 or offset >= len(s):
            raise RangeError(f"boundary {b.isoformat()} outside the open series span")
        cuts.append(offset)
    edges = [0] + cuts + [len(s)]
    return [s.slice(a, b) for a, b in zip(edges, edges[1:])]


def summarize(s: DailySeries) -> SeriesSummary:
    """Sample statistics (sd uses the n-1 divisor and needs n >= 2)."""
    n = len(s)
    if n == 0:
        raise EmptySeriesError("cannot summarize an empty series")
    mean = float(np.mean(s.values))
    sd = float(np.std(s.values, ddof=1)) if n >= 2 else None
    return SeriesSummary(n=n, mean=mean, sd=sd, median=float(np.median(s.values)))


def series_to_csv(s: DailySeries) -> str:
    lines = ["date,value"]
    d = s.start_date
    for v in s.values:
        lines.append(f"{d.isoformat()},{float(v)!r}")
        d += timedelta(days=1)
    return "\n".join(lines) + "\n"


def series_from_csv(source) -> DailySeries:
    """Read a ``date,value`` CSV with a contiguous daily calendar.

    ``source`` may be a path, text, bytes, or a file-like object.  Interior
    missing dates raise GapError rather than being silently interpolated.
    """
    text = _read_text(source)
    rows = [ln for ln in text.splitlines() if ln.strip()]
    if not rows or rows[0].strip().lower().replace(" ", "") != "date,value":
        raise GapError("expected header 'date,value'")
    days, vals = [], []
    for ln in rows[1:]:
        d_str, v_str = ln.split(",", 1)
        days.append(date.fromisoformat(d_str.strip()))
        vals.append(float(v_str))
    if not days:
        raise EmptySeriesError("series CSV has no data rows")
    for prev, cur in zip(days, days[1:]):
        step = (cur - prev).days
        if step <= 0:
            raise GapError(f"dates not strictly increasing at {cur.isoformat()}")
        if step > 1:
            missing = prev + timedelta(days=1)
            raise GapError(f"missing date {missing.isoformat()}")
    return DailySeries(days[0], np.asarray(vals, dtype=float))


def _read_text(source) -> str:
    if isinstance(source, bytes):
        return source.decode("utf-8-sig")
    if isinstance(source, Path):
        return source.read_text(encoding="utf-8-sig")
    if isinstance(source, str):
        if "\n" in source or "," in source:
            return source
        return Path(source).read_text(encoding="utf-8-sig")
    if hasattr(source, "read"):
        data = source.read()
        return data.decode("utf-8-sig") if isinstance(data, bytes) else data
    raise ParameterError(f"cannot read CSV from {type(source).__name__}")


def series_to_json(s: DailySeries) -> str:
    return json.dumps(s.to_json_dict(), sort_keys=True)


def series_from_json(text: str) -> DailySeries:
    return DailySeries.from_json_dict(json.loads(text))
