"""Trailing statistics per candle: moving-average baselines, 30-day volume
totals/maxima, daily averages, EWMA of daily totals, and daily volatility.

All statistics at index i are computed strictly from candles 0..i-1; the
candle under test never contaminates its own baseline.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ._kernels import BACKEND, rolling_contexts
from .errors import EmptySeries, NoCompleteDays
from .marketdata import SymbolSeries

DEFAULT_LAG_HOURS = 12
DEFAULT_WINDOW_DAYS = 30

__all__ = ["RollingContext", "ContextArrays", "build_contexts",
           "context_arrays", "ewma_daily", "BACKEND"]


@dataclass(frozen=True)
class RollingContext:
    """All trailing statistics needed by the gates and thresholds at one candle."""

    sma_open_12h: float
    sma_vol_12h: float
    v_tot_30d: float
    v_max_30d: float
    v_avg_daily: float
    ewma_d: float
    sigma_daily: float
    history_hours: int
    complete_days: int


@dataclass(frozen=True)
class ContextArrays:
    """Column-wise RollingContexts for a whole series (fast sweep path)."""

    sma_open_12h: np.ndarray
    sma_vol_12h: np.ndarray
    v_tot_30d: np.ndarray
    v_max_30d: np.ndarray
    v_avg_daily: np.ndarray
    ewma_d: np.ndarray
    sigma_daily: np.ndarray
    history_hours: np.ndarray
    complete_days: np.ndarray

    def __len__(self) -> int:
        return len(self.sma_open_12h)

    def at(self, i: int) -> RollingContext:
        return RollingContext(
            float(self.sma_open_12h[i]), float(self.sma_vol_12h[i]),
            float(self.v_tot_30d[i]), float(self.v_max_30d[i]),
            float(self.v_avg_daily[i]), float(self.ewma_d[i]),
            float(self.sigma_daily[i]), int(self.history_hours[i]),
            int(self.complete_days[i]),
        )


def context_arrays(series: SymbolSeries, d_span: int = 10,
                   window_days: int = DEFAULT_WINDOW_DAYS,
                   lag_hours: int = DEFAULT_LAG_HOURS) -> ContextArrays:
    """Single-pass context computation over a normalized series."""
    if len(series) == 0:
        raise EmptySeries(f"no candles for {series.symbol}")
    if not series.is_contiguous:
        raise ValueError(f"series {series.symbol} is not normalized")
    if d_span < 1 or window_days < 1 or lag_hours < 1:
        raise ValueError("d_span, window_days and lag_hours must be >= 1")
    out = rolling_contexts(
        np.ascontiguousarray(series.open),
        np.ascontiguousarray(series.volume),
        np.ascontiguousarray(series.synthetic, dtype=np.uint8),
        series.start_hour, lag_hours, window_days, d_span,
    )
    return ContextArrays(*out)


def build_contexts(series: SymbolSeries, d_span: int = 10,
                   window_days: int = DEFAULT_WINDOW_DAYS,
                   lag_hours: int = DEFAULT_LAG_HOURS) -> list[RollingContext]:
    """One RollingContext per candle of the series."""
    arrays = context_arrays(series, d_span, window_days, lag_hours)
    return [arrays.at(i) for i in range(len(arrays))]


def ewma_daily(day_totals, d_span: int) -> float:
    """Exponentially weighted mean of daily totals, most recent first.

    Weights are (1 - lam)^i with lam = 2/(d_span + 1), normalized over the
    available history.
    """
    totals = list(day_totals)
    if not totals:
        raise NoCompleteDays("EWMA needs at least one complete day total")
    if d_span < 1:
        raise ValueError("d_span must be >= 1")
    lam = 2.0 / (d_span + 1.0)
    weights = (1.0 - lam) ** np.arange(len(totals))
    return float(np.dot(weights, totals) / weights.sum())
