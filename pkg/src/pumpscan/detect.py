"""Per-candle anomaly flags and event clustering.

A candle is a combined anomaly when it passes the eligibility gate AND its
volume exceeds (1 + gamma_v) times the 12h volume SMA AND its compared
price (open or high, per setting) exceeds (1 + gamma_p) times the 12h SMA
of the open price.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Optional, Sequence

import numpy as np

from .errors import EmptySeries
from .gates import EligibilityRule, eligible_mask
from .marketdata import Candle, SymbolSeries, from_epoch_hours
from .rolling import ContextArrays, RollingContext, context_arrays

DEFAULT_CLUSTER_GAP_HOURS = 3

__all__ = ["ThresholdSetting", "SETTINGS", "AnomalyFlag", "DetectedEvent",
           "flag_candle", "flag_masks", "detect_series", "cluster_events",
           "DEFAULT_CLUSTER_GAP_HOURS"]


@dataclass(frozen=True)
class ThresholdSetting:
    """One of the five price/volume threshold configurations."""

    id: int
    price_field: str          # "open" or "high"
    price_increase: float     # gamma_p
    volume_increase: float    # gamma_v
    lag_hours: int = 12

    def __post_init__(self):
        if self.price_field not in ("open", "high"):
            raise ValueError(f"price_field must be open or high: {self.price_field}")
        if self.price_increase <= 0 or self.volume_increase <= 0:
            raise ValueError("thresholds must be positive fractions")
        if self.lag_hours < 1:
            raise ValueError("lag_hours must be >= 1")


SETTINGS: dict[int, ThresholdSetting] = {
    1: ThresholdSetting(1, "open", 0.90, 4.00),
    2: ThresholdSetting(2, "open", 0.70, 3.00),
    3: ThresholdSetting(3, "high", 1.00, 4.00),
    4: ThresholdSetting(4, "high", 0.90, 4.00),
    5: ThresholdSetting(5, "high", 0.80, 3.00),
}


@dataclass(frozen=True)
class AnomalyFlag:
    timestamp: datetime
    eligible: bool
    volume_anomaly: bool
    price_anomaly: bool
    combined: bool
    price_ratio: Optional[float]   # compared price / 12h open SMA
    volume_ratio: Optional[float]  # volume / 12h volume SMA


@dataclass(frozen=True)
class DetectedEvent:
    symbol: str
    start: datetime
    end: datetime
    peak_candle: Candle
    max_price_ratio: Optional[float]
    max_volume_ratio: Optional[float]


def threshold_masks(series: SymbolSeries, ctx: ContextArrays,
                    setting: ThresholdSetting):
    """Warm-up, volume-threshold, and price-threshold masks for one setting."""
    warm = ctx.history_hours >= setting.lag_hours
    price = series.high if setting.price_field == "high" else series.open
    v = series.volume

    price_anom = (ctx.sma_open_12h > 0) & \
        (price > (1.0 + setting.price_increase) * ctx.sma_open_12h) & warm
    # zero volume baseline counts as an infinite increase; the gate filters it
    vol_anom = ((v > (1.0 + setting.volume_increase) * ctx.sma_vol_12h)
                | ((ctx.sma_vol_12h == 0) & (v > 0))) & warm
    return warm, vol_anom, price_anom


def flag_masks(series: SymbolSeries, ctx: ContextArrays,
               setting: ThresholdSetting, rule: EligibilityRule):
    """Vectorized flags for a whole series.

    Returns (eligible, volume_anomaly, price_anomaly, combined) bool arrays.
    """
    warm, vol_anom, price_anom = threshold_masks(series, ctx, setting)
    eligible = eligible_mask(series.volume, ctx, rule) & warm
    combined = eligible & vol_anom & price_anom
    return eligible, vol_anom, price_anom, combined


def flag_candle(candle: Candle, ctx: RollingContext,
                setting: ThresholdSetting, rule: EligibilityRule) -> AnomalyFlag:
    """Flag a single candle (scalar mirror of flag_masks)."""
    from .errors import MissingContext
    from .gates import is_eligible

    price = candle.high if setting.price_field == "high" else candle.open
    price_ratio = price / ctx.sma_open_12h if ctx.sma_open_12h > 0 else None
    volume_ratio = candle.volume / ctx.sma_vol_12h if ctx.sma_vol_12h > 0 else None

    if ctx.history_hours < setting.lag_hours:
        return AnomalyFlag(candle.timestamp, False, False, False, False,
                           price_ratio, volume_ratio)

    price_anom = ctx.sma_open_12h > 0 and \
        price > (1.0 + setting.price_increase) * ctx.sma_open_12h
    vol_anom = (candle.volume > (1.0 + setting.volume_increase) * ctx.sma_vol_12h
                or (ctx.sma_vol_12h == 0 and candle.volume > 0))
    try:
        eligible = is_eligible(candle.volume, ctx, rule)
    except MissingContext:
        eligible = False
    combined = eligible and vol_anom and price_anom
    return AnomalyFlag(candle.timestamp, eligible, vol_anom, price_anom,
                       combined, price_ratio, volume_ratio)


def detect_series(series: SymbolSeries, setting: ThresholdSetting,
                  rule: EligibilityRule,
                  window_days: int = 30) -> list[AnomalyFlag]:
    """One AnomalyFlag per candle of a normalized series."""
    if len(series) == 0:
        raise EmptySeries(f"no candles for {series.symbol}")
    ctx = context_arrays(series, d_span=rule.d_span, window_days=window_days,
                         lag_hours=setting.lag_hours)
    eligible, vol_anom, price_anom, combined = flag_masks(series, ctx, setting, rule)
    sma_o = ctx.sma_open_12h
    sma_v = ctx.sma_vol_12h
    price = series.high if setting.price_field == "high" else series.open
    flags = []
    for i in range(len(series)):
        pr = float(price[i] / sma_o[i]) if sma_o[i] > 0 else None
        vr = float(series.volume[i] / sma_v[i]) if sma_v[i] > 0 else None
        flags.append(AnomalyFlag(
            from_epoch_hours(series.hours[i]),
            bool(eligible[i]), bool(vol_anom[i]), bool(price_anom[i]),
            bool(combined[i]), pr, vr,
        ))
    return flags


def cluster_events(flags: Sequence[AnomalyFlag], symbol: str,
                   series: SymbolSeries,
                   cluster_gap: int = DEFAULT_CLUSTER_GAP_HOURS) -> list[DetectedEvent]:
    """Merge combined-anomalous candles into events.

    Runs of flagged candles whose inter-candle gap is at most cluster_gap
    hours form one event.
    """
    combined = np.array([f.combined for f in flags], dtype=bool)
    return cluster_events_from_mask(combined, symbol, series,
                                    [f.price_ratio for f in flags],
                                    [f.volume_ratio for f in flags],
                                    cluster_gap)


def cluster_events_from_mask(combined: np.ndarray, symbol: str,
                             series: SymbolSeries,
                             price_ratio=None, volume_ratio=None,
                             cluster_gap: int = DEFAULT_CLUSTER_GAP_HOURS) -> list[DetectedEvent]:
    """Cluster directly from a boolean mask (fast sweep path)."""
    idx = np.flatnonzero(combined)
    if len(idx) == 0:
        return []
    breaks = np.flatnonzero(np.diff(idx) > cluster_gap)
    starts = np.concatenate(([0], breaks + 1))
    ends = np.concatenate((breaks, [len(idx) - 1]))
    events = []
    for s, e in zip(starts, ends):
        members = idx[s:e + 1]
        peak = members[np.argmax(series.volume[members])]
        if price_ratio is not None:
            prs = [price_ratio[i] for i in members if price_ratio[i] is not None]
            vrs = [volume_ratio[i] for i in members if volume_ratio[i] is not None]
            max_pr = max(prs) if prs else None
            max_vr = max(vrs) if vrs else None
        else:
            max_pr = max_vr = None
        events.append(DetectedEvent(
            symbol,
            from_epoch_hours(series.hours[members[0]]),
            from_epoch_hours(series.hours[members[-1]]),
            series.candle(peak),
            max_pr, max_vr,
        ))
    return events
