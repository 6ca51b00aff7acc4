"""Pure-Python rolling-statistics kernel.

Single pass over a contiguous hourly series, maintaining trailing windows
so that the emitted statistics at index i depend only on candles 0..i-1.
Same contract as the Cython kernel; used when the extension is unavailable
or when PUMPSCAN_PURE_PYTHON is set.
"""

from collections import deque

import numpy as np

HOURS_PER_DAY = 24


def rolling_contexts(open_, volume, synthetic, start_hour, lag,
                     window_days, d_span):
    """Compute per-candle trailing statistics for a normalized series.

    Returns a tuple of arrays (one entry per candle):
    sma_open, sma_vol, v_tot, v_max, v_avg, ewma, sigma,
    history_hours, complete_days.
    """
    n = len(open_)
    win = window_days * HOURS_PER_DAY
    lam = 2.0 / (d_span + 1.0)

    sma_open = np.zeros(n)
    sma_vol = np.zeros(n)
    v_tot = np.zeros(n)
    v_max = np.zeros(n)
    v_avg = np.zeros(n)
    ewma = np.zeros(n)
    sigma = np.zeros(n)
    history_hours = np.zeros(n, dtype=np.int64)
    complete_days = np.zeros(n, dtype=np.int64)

    sum_open_lag = 0.0
    sum_vol_lag = 0.0
    sum_win = 0.0
    max_q = deque()            # (index, volume), volumes strictly decreasing
    day_totals = deque(maxlen=window_days)   # most recent last
    accum_day = start_hour // HOURS_PER_DAY
    cur_day_total = 0.0
    real_count = 0
    ewma_cache = 0.0
    sigma_cache = 0.0

    for i in range(n):
        day_i = (start_hour + i) // HOURS_PER_DAY
        if day_i > accum_day:
            # the accumulating day closed; partial leading days don't count
            if accum_day * HOURS_PER_DAY >= start_hour:
                day_totals.append(cur_day_total)
                ewma_cache = _ewma(day_totals, lam)
                sigma_cache = _pop_std(day_totals)
            accum_day = day_i
            cur_day_total = 0.0

        k = lag if i >= lag else i
        if k > 0:
            sma_open[i] = sum_open_lag / k
            sma_vol[i] = sum_vol_lag / k
        v_tot[i] = sum_win
        if max_q:
            v_max[i] = max_q[0][1]
        nd = len(day_totals)
        complete_days[i] = nd
        if nd > 0:
            v_avg[i] = sum_win / nd
            ewma[i] = ewma_cache
            sigma[i] = sigma_cache
        history_hours[i] = real_count

        # push candle i into the trailing state
        sum_open_lag += open_[i]
        sum_vol_lag += volume[i]
        if i >= lag:
            sum_open_lag -= open_[i - lag]
            sum_vol_lag -= volume[i - lag]
        sum_win += volume[i]
        if i >= win:
            sum_win -= volume[i - win]
        while max_q and max_q[-1][1] <= volume[i]:
            max_q.pop()
        max_q.append((i, volume[i]))
        if max_q[0][0] <= i - win:
            max_q.popleft()
        cur_day_total += volume[i]
        if not synthetic[i]:
            real_count += 1

    return (sma_open, sma_vol, v_tot, v_max, v_avg, ewma, sigma,
            history_hours, complete_days)


def _ewma(totals, lam):
    """Normalized exponential weighting, most recent total first."""
    num = 0.0
    den = 0.0
    w = 1.0
    for x in reversed(totals):
        num += w * x
        den += w
        w *= 1.0 - lam
    return num / den


def _pop_std(totals):
    n = len(totals)
    mean = sum(totals) / n
    var = sum((x - mean) ** 2 for x in totals) / n
    return var ** 0.5
