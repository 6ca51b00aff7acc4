"""Deterministic synthetic corpus generator.

Profiles model the token populations that make detection hard: fully
dormant listings, dormant listings with tiny de-listing-avoidance trades
(`blippy`), and regularly traded tokens. Pumps are injected at known
times so the corpus doubles as a ground-truth oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from .errors import InvalidSpec
from .ingestion import GroundTruthEvent, store_series
from .marketdata import SymbolSeries, to_epoch_hours

PROFILES = ("dormant", "blippy", "regular")

DEFAULT_START = datetime(2024, 8, 15, tzinfo=timezone.utc)


@dataclass(frozen=True)
class ScenarioSpec:
    symbol: str
    seed: int
    profile: str
    span_days: int
    base_price: float = 1.0
    base_hourly_volume: float = 0.0
    pump_times: tuple[datetime, ...] = ()
    pump_price_mult: float = 4.0
    pump_volume_mult: float = 50.0
    start: datetime = DEFAULT_START
    blip_interval_hours: int = 72
    sigma_log: float = 0.5
    price_noise: float = 0.005

    def __post_init__(self):
        if self.profile not in PROFILES:
            raise InvalidSpec(f"unknown profile {self.profile!r}")
        if self.span_days < 1:
            raise InvalidSpec("span_days must be >= 1")
        if self.base_price <= 0:
            raise InvalidSpec("base_price must be positive")
        if self.pump_times and (self.pump_price_mult <= 1 or self.pump_volume_mult <= 1):
            raise InvalidSpec("pump multipliers must exceed 1")
        start_h = to_epoch_hours(self.start)
        end_h = start_h + self.span_days * 24
        for t in self.pump_times:
            if not start_h <= to_epoch_hours(t) < end_h:
                raise InvalidSpec(f"pump time {t.isoformat()} outside span")


def generate(spec: ScenarioSpec) -> tuple[SymbolSeries, list[GroundTruthEvent]]:
    """Build one series plus the ground truth for its injected pumps."""
    n = spec.span_days * 24
    start_hour = to_epoch_hours(spec.start)
    rng = np.random.default_rng(spec.seed)

    if spec.profile == "regular":
        if spec.base_hourly_volume <= 0:
            raise InvalidSpec("regular profile needs base_hourly_volume > 0")
        # lognormal with median at base volume; heavy-ish right tail
        volume = rng.lognormal(np.log(spec.base_hourly_volume),
                               spec.sigma_log, size=n)
        open_ = spec.base_price * (1.0 + spec.price_noise * rng.standard_normal(n))
        close = spec.base_price * (1.0 + spec.price_noise * rng.standard_normal(n))
        spread = np.abs(spec.price_noise * rng.standard_normal(n))
        high = np.maximum(open_, close) * (1.0 + spread)
        low = np.minimum(open_, close) * (1.0 - spread)
    else:
        volume = np.zeros(n)
        if spec.profile == "blippy":
            volume[spec.blip_interval_hours::spec.blip_interval_hours] = 1.0
        open_ = np.full(n, spec.base_price)
        high = np.full(n, spec.base_price)
        low = np.full(n, spec.base_price)
        close = np.full(n, spec.base_price)

    truth = []
    for t in sorted(spec.pump_times):
        i = to_epoch_hours(t) - start_hour
        lo = max(0, i - 12)
        vol_base = float(np.mean(volume[lo:i])) if i > lo else 0.0
        vol_base = max(vol_base, spec.base_hourly_volume) or 1.0
        open_base = float(np.mean(open_[lo:i])) if i > lo else spec.base_price
        volume[i] = spec.pump_volume_mult * vol_base
        high[i] = spec.pump_price_mult * open_base
        close[i] = open_[i]  # intra-candle dump: price reverts immediately
        low[i] = min(low[i], open_[i], close[i])
        if i + 1 < n:
            volume[i + 1] = 2.0 * vol_base  # decaying aftershock
        truth.append(GroundTruthEvent(spec.symbol, t, "synthetic"))

    series = SymbolSeries(spec.symbol, start_hour, open_, high, low, close,
                          volume, np.zeros(n, dtype=bool))
    return series, truth


def write_corpus(specs, directory) -> tuple[Path, int]:
    """Generate and store every scenario plus a combined truth.csv."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    all_truth: list[GroundTruthEvent] = []
    count = 0
    for spec in specs:
        series, truth = generate(spec)
        store_series(series, directory)
        all_truth.extend(truth)
        count += 1
    truth_path = directory / "truth.csv"
    tmp = truth_path.with_suffix(".csv.tmp")
    with open(tmp, "w", newline="") as fh:
        fh.write("symbol,announce_time,source\n")
        for e in sorted(all_truth, key=lambda e: (e.announce_time, e.symbol)):
            fh.write(f"{e.symbol},"
                     f"{e.announce_time.strftime('%Y-%m-%dT%H:%M:%SZ')},"
                     f"{e.source}\n")
    tmp.replace(truth_path)
    return directory, count
