"""Core candle/series types and series normalization.

Hourly OHLCV candles are the unit of analysis. A SymbolSeries keeps its
columns as numpy arrays (timestamps as integer epoch-hours) so the rolling
kernels and the detection sweep can run vectorized; `Candle` objects are
materialized on demand.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import date, datetime, timezone
from typing import Iterator, Sequence

import numpy as np

from .errors import EmptySeries, MalformedRecord, NegativeVolume, OhlcViolation

HOUR_SECONDS = 3600
HOURS_PER_DAY = 24


def to_epoch_hours(ts: datetime) -> int:
    """Truncate a UTC datetime to its containing hour, as hours since epoch."""
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return int(ts.timestamp() // HOUR_SECONDS)


def from_epoch_hours(hour: int) -> datetime:
    return datetime.fromtimestamp(int(hour) * HOUR_SECONDS, tz=timezone.utc)


def parse_timestamp(raw: str) -> datetime:
    """Parse an RFC3339 UTC timestamp."""
    text = raw.strip()
    if text.endswith(("Z", "z")):
        text = text[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(text)
    except ValueError as exc:
        raise MalformedRecord(f"bad timestamp {raw!r}: {exc}") from None
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


@dataclass(frozen=True)
class Candle:
    """One hourly OHLCV record. `synthetic` marks gap-filled candles."""

    timestamp: datetime
    open: float
    high: float
    low: float
    close: float
    volume: float
    synthetic: bool = False


@dataclass(frozen=True)
class DailyTotal:
    date: date
    total_volume: float
    candle_count: int


def validate_candle(record) -> Candle:
    """Validate a raw candle record (mapping or 6-tuple) into a Candle.

    Rejects non-finite or negative fields and OHLC ordering violations.
    The timestamp is truncated to its hour boundary.
    """
    if isinstance(record, Candle):
        fields = (record.timestamp, record.open, record.high, record.low,
                  record.close, record.volume)
    elif isinstance(record, dict):
        try:
            fields = (record["timestamp"], record["open"], record["high"],
                      record["low"], record["close"], record["volume"])
        except KeyError as exc:
            raise MalformedRecord(f"missing field {exc}") from None
    else:
        fields = tuple(record)
        if len(fields) != 6:
            raise MalformedRecord(f"expected 6 fields, got {len(fields)}")

    raw_ts = fields[0]
    if isinstance(raw_ts, datetime):
        ts = raw_ts if raw_ts.tzinfo else raw_ts.replace(tzinfo=timezone.utc)
    else:
        ts = parse_timestamp(str(raw_ts))
    ts = from_epoch_hours(to_epoch_hours(ts))

    values = []
    for name, raw in zip(("open", "high", "low", "close", "volume"), fields[1:]):
        try:
            value = float(raw)
        except (TypeError, ValueError):
            raise MalformedRecord(f"unparseable {name}: {raw!r}") from None
        if not math.isfinite(value):
            raise MalformedRecord(f"non-finite {name}: {raw!r}")
        if value < 0:
            if name == "volume":
                raise NegativeVolume(f"volume {value} < 0 at {ts.isoformat()}")
            raise MalformedRecord(f"negative {name}: {value}")
        values.append(value)
    o, h, l, c, v = values

    if l > h or l > min(o, c) or h < max(o, c):
        raise OhlcViolation(
            f"OHLC ordering violated at {ts.isoformat()}: o={o} h={h} l={l} c={c}"
        )
    return Candle(ts, o, h, l, c, v)


class SymbolSeries:
    """Hourly candle series for one symbol, stored column-wise.

    After `normalize_series` the hours are contiguous: candle i sits at
    `start_hour + i`.
    """

    INTERVAL_HOURS = 1

    def __init__(self, symbol: str, start_hour: int,
                 open_: np.ndarray, high: np.ndarray, low: np.ndarray,
                 close: np.ndarray, volume: np.ndarray,
                 synthetic: np.ndarray, hours: np.ndarray | None = None):
        self.symbol = symbol
        self.start_hour = int(start_hour)
        self.open = np.asarray(open_, dtype=np.float64)
        self.high = np.asarray(high, dtype=np.float64)
        self.low = np.asarray(low, dtype=np.float64)
        self.close = np.asarray(close, dtype=np.float64)
        self.volume = np.asarray(volume, dtype=np.float64)
        self.synthetic = np.asarray(synthetic, dtype=bool)
        if hours is None:
            hours = self.start_hour + np.arange(len(self.open), dtype=np.int64)
        self.hours = np.asarray(hours, dtype=np.int64)

    def __len__(self) -> int:
        return len(self.open)

    def __eq__(self, other) -> bool:
        if not isinstance(other, SymbolSeries):
            return NotImplemented
        return (self.symbol == other.symbol
                and np.array_equal(self.hours, other.hours)
                and np.array_equal(self.open, other.open)
                and np.array_equal(self.high, other.high)
                and np.array_equal(self.low, other.low)
                and np.array_equal(self.close, other.close)
                and np.array_equal(self.volume, other.volume)
                and np.array_equal(self.synthetic, other.synthetic))

    @property
    def is_contiguous(self) -> bool:
        return bool(np.all(np.diff(self.hours) == 1)) if len(self) > 1 else True

    def candle(self, i: int) -> Candle:
        return Candle(
            from_epoch_hours(self.hours[i]),
            float(self.open[i]), float(self.high[i]), float(self.low[i]),
            float(self.close[i]), float(self.volume[i]), bool(self.synthetic[i]),
        )

    def __iter__(self) -> Iterator[Candle]:
        for i in range(len(self)):
            yield self.candle(i)

    @classmethod
    def from_candles(cls, symbol: str, candles: Sequence[Candle]) -> "SymbolSeries":
        if not candles:
            raise EmptySeries(f"no candles for {symbol}")
        hours = np.array([to_epoch_hours(c.timestamp) for c in candles], dtype=np.int64)
        return cls(
            symbol, int(hours[0]),
            np.array([c.open for c in candles]),
            np.array([c.high for c in candles]),
            np.array([c.low for c in candles]),
            np.array([c.close for c in candles]),
            np.array([c.volume for c in candles]),
            np.array([c.synthetic for c in candles], dtype=bool),
            hours=hours,
        )


def normalize_series(series: SymbolSeries) -> SymbolSeries:
    """Sort, deduplicate, and gap-fill a series to one candle per hour.

    Duplicate timestamps keep the last record. Missing hours are filled
    with synthetic candles carrying the previous close and zero volume.
    Idempotent: normalizing a normalized series is a no-op.
    """
    if len(series) == 0:
        raise EmptySeries(f"no candles for {series.symbol}")

    order = np.argsort(series.hours, kind="stable")
    hours = series.hours[order]
    # keep the last record for each duplicated hour
    keep = np.ones(len(hours), dtype=bool)
    keep[:-1] = hours[:-1] != hours[1:]
    idx = order[keep]
    hours = series.hours[idx]

    start, end = int(hours[0]), int(hours[-1])
    n = end - start + 1
    pos = hours - start

    open_ = np.empty(n)
    high = np.empty(n)
    low = np.empty(n)
    close = np.empty(n)
    volume = np.zeros(n)
    synthetic = np.ones(n, dtype=bool)

    close[pos] = series.close[idx]
    # forward-fill close into the gaps, then seed gap OHLC from it
    filled = np.zeros(n, dtype=bool)
    filled[pos] = True
    last_seen = np.maximum.accumulate(np.where(filled, np.arange(n), 0))
    close = close[last_seen]
    open_[:] = close
    high[:] = close
    low[:] = close

    open_[pos] = series.open[idx]
    high[pos] = series.high[idx]
    low[pos] = series.low[idx]
    volume[pos] = series.volume[idx]
    synthetic[pos] = series.synthetic[idx]

    return SymbolSeries(series.symbol, start, open_, high, low, close,
                        volume, synthetic)


def daily_totals(series: SymbolSeries) -> list[DailyTotal]:
    """Aggregate candle volumes into UTC calendar-day totals."""
    if len(series) == 0:
        raise EmptySeries(f"no candles for {series.symbol}")
    days = series.hours // HOURS_PER_DAY
    uniq, inverse, counts = np.unique(days, return_inverse=True, return_counts=True)
    totals = np.zeros(len(uniq))
    np.add.at(totals, inverse, series.volume)
    return [
        DailyTotal(from_epoch_hours(d * HOURS_PER_DAY).date(), float(t), int(c))
        for d, t, c in zip(uniq, totals, counts)
    ]
