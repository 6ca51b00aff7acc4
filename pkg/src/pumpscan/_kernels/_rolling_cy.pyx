# cython: boundscheck=False, wraparound=False, cdivision=True
"""Cython rolling-statistics kernel; mirrors rolling_py.rolling_contexts."""

import numpy as np

cimport numpy as cnp
from libc.math cimport sqrt

cnp.import_array()

DEF HOURS_PER_DAY = 24


def rolling_contexts(double[::1] open_, double[::1] volume,
                     cnp.uint8_t[::1] synthetic, long long start_hour,
                     int lag, int window_days, int d_span):
    """Single-pass trailing statistics; see rolling_py for the contract."""
    cdef Py_ssize_t n = open_.shape[0]
    cdef int win = window_days * HOURS_PER_DAY
    cdef double lam = 2.0 / (d_span + 1.0)

    sma_open_a = np.zeros(n)
    sma_vol_a = np.zeros(n)
    v_tot_a = np.zeros(n)
    v_max_a = np.zeros(n)
    v_avg_a = np.zeros(n)
    ewma_a = np.zeros(n)
    sigma_a = np.zeros(n)
    history_a = np.zeros(n, dtype=np.int64)
    days_a = np.zeros(n, dtype=np.int64)

    cdef double[::1] sma_open = sma_open_a
    cdef double[::1] sma_vol = sma_vol_a
    cdef double[::1] v_tot = v_tot_a
    cdef double[::1] v_max = v_max_a
    cdef double[::1] v_avg = v_avg_a
    cdef double[::1] ewma = ewma_a
    cdef double[::1] sigma = sigma_a
    cdef long long[::1] history = history_a
    cdef long long[::1] days_out = days_a

    # monotonic max deque over the trailing window (indices into volume)
    maxq_a = np.zeros(n if n > 0 else 1, dtype=np.int64)
    cdef long long[::1] maxq = maxq_a
    cdef Py_ssize_t q_head = 0, q_tail = 0   # [q_head, q_tail)

    # ring buffer of the most recent complete-day totals
    ring_a = np.zeros(window_days, dtype=np.float64)
    cdef double[::1] ring = ring_a
    cdef int ring_n = 0, ring_pos = 0        # ring_pos = next write slot

    cdef double sum_open_lag = 0.0, sum_vol_lag = 0.0, sum_win = 0.0
    cdef double cur_day_total = 0.0
    cdef double ewma_cache = 0.0, sigma_cache = 0.0
    cdef long long accum_day = start_hour // HOURS_PER_DAY
    cdef long long real_count = 0
    cdef long long day_i
    cdef Py_ssize_t i
    cdef int k, nd, j, idx
    cdef double num, den, w, mean, var, x

    for i in range(n):
        day_i = (start_hour + i) // HOURS_PER_DAY
        if day_i > accum_day:
            if accum_day * HOURS_PER_DAY >= start_hour:
                ring[ring_pos] = cur_day_total
                ring_pos = (ring_pos + 1) % window_days
                if ring_n < window_days:
                    ring_n += 1
                # recompute the EWMA / sigma caches, most recent day first
                num = 0.0
                den = 0.0
                w = 1.0
                mean = 0.0
                for j in range(ring_n):
                    idx = (ring_pos - 1 - j) % window_days
                    if idx < 0:
                        idx += window_days
                    x = ring[idx]
                    num += w * x
                    den += w
                    w *= 1.0 - lam
                    mean += x
                ewma_cache = num / den
                mean /= ring_n
                var = 0.0
                for j in range(ring_n):
                    idx = (ring_pos - 1 - j) % window_days
                    if idx < 0:
                        idx += window_days
                    x = ring[idx] - mean
                    var += x * x
                sigma_cache = sqrt(var / ring_n)
            accum_day = day_i
            cur_day_total = 0.0

        k = lag if i >= lag else <int>i
        if k > 0:
            sma_open[i] = sum_open_lag / k
            sma_vol[i] = sum_vol_lag / k
        v_tot[i] = sum_win
        if q_tail > q_head:
            v_max[i] = volume[maxq[q_head]]
        nd = ring_n
        days_out[i] = nd
        if nd > 0:
            v_avg[i] = sum_win / nd
            ewma[i] = ewma_cache
            sigma[i] = sigma_cache
        history[i] = real_count

        sum_open_lag += open_[i]
        sum_vol_lag += volume[i]
        if i >= lag:
            sum_open_lag -= open_[i - lag]
            sum_vol_lag -= volume[i - lag]
        sum_win += volume[i]
        if i >= win:
            sum_win -= volume[i - win]
        while q_tail > q_head and volume[maxq[q_tail - 1]] <= volume[i]:
            q_tail -= 1
        maxq[q_tail] = i
        q_tail += 1
        if maxq[q_head] <= i - win:
            q_head += 1
        cur_day_total += volume[i]
        if synthetic[i] == 0:
            real_count += 1

    return (sma_open_a, sma_vol_a, v_tot_a, v_max_a, v_avg_a, ewma_a,
            sigma_a, history_a, days_a)
