"""Shared fixtures and the naive rolling-statistics oracle.

The oracle recomputes every trailing statistic from explicit window slices
(O(n*w)) and stays independent of the streaming kernels it checks.
"""

import math

import numpy as np
import pytest

from pumpscan.marketdata import SymbolSeries

HOURS_PER_DAY = 24


def make_series(symbol="TST_USDT", start_hour=0, open_=None, high=None,
                low=None, close=None, volume=None, synthetic=None):
    n = len(volume if volume is not None else open_)
    if open_ is None:
        open_ = np.ones(n)
    open_ = np.asarray(open_, dtype=float)
    if high is None:
        high = open_.copy()
    if low is None:
        low = np.minimum(np.asarray(open_), np.asarray(high))
    if close is None:
        close = open_.copy()
    if volume is None:
        volume = np.zeros(n)
    if synthetic is None:
        synthetic = np.zeros(n, dtype=bool)
    return SymbolSeries(symbol, start_hour, open_, high, low, close,
                        np.asarray(volume, dtype=float), synthetic)


def naive_contexts(series, d_span=10, window_days=30, lag_hours=12):
    """Brute-force per-index recomputation of all RollingContext fields."""
    n = len(series)
    start = series.start_hour
    vol = series.volume
    opn = series.open
    win = window_days * HOURS_PER_DAY
    lam = 2.0 / (d_span + 1.0)
    first_full_day = -(-start // HOURS_PER_DAY)  # ceil

    out = {k: np.zeros(n) for k in
           ("sma_open_12h", "sma_vol_12h", "v_tot_30d", "v_max_30d",
            "v_avg_daily", "ewma_d", "sigma_daily")}
    out["history_hours"] = np.zeros(n, dtype=np.int64)
    out["complete_days"] = np.zeros(n, dtype=np.int64)

    for i in range(n):
        lo = max(0, i - lag_hours)
        if i > lo:
            out["sma_open_12h"][i] = opn[lo:i].mean()
            out["sma_vol_12h"][i] = vol[lo:i].mean()
        wlo = max(0, i - win)
        window = vol[wlo:i]
        out["v_tot_30d"][i] = window.sum()
        out["v_max_30d"][i] = window.max() if len(window) else 0.0

        cur_day = (start + i) // HOURS_PER_DAY
        days = list(range(max(first_full_day, cur_day - window_days), cur_day))
        totals = []
        for day in reversed(days):  # most recent first
            a = max(0, day * HOURS_PER_DAY - start)
            b = min(n, (day + 1) * HOURS_PER_DAY - start)
            totals.append(vol[a:b].sum())
        out["complete_days"][i] = len(totals)
        if totals:
            out["v_avg_daily"][i] = out["v_tot_30d"][i] / len(totals)
            weights = [(1.0 - lam) ** j for j in range(len(totals))]
            out["ewma_d"][i] = (sum(w * x for w, x in zip(weights, totals))
                                / sum(weights))
            mean = sum(totals) / len(totals)
            out["sigma_daily"][i] = math.sqrt(
                sum((x - mean) ** 2 for x in totals) / len(totals))
        out["history_hours"][i] = int((~series.synthetic[:i]).sum())
    return out


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_series(rng, n=1000, start_hour=7, with_gaps=False, symbol="RND_USDT"):
    vol = rng.lognormal(2.0, 1.0, n)
    vol[rng.random(n) < 0.1] = 0.0
    opn = rng.lognormal(0.0, 0.2, n)
    cls = opn * (1 + 0.05 * rng.standard_normal(n))
    spread = np.abs(0.05 * rng.standard_normal(n))
    high = np.maximum(opn, cls) * (1 + spread)
    low = np.minimum(opn, cls) * (1 - spread)
    syn = np.zeros(n, dtype=bool)
    if with_gaps:
        syn = rng.random(n) < 0.05
        vol[syn] = 0.0
    return make_series(symbol, start_hour, opn, high, low, cls, vol, syn)
