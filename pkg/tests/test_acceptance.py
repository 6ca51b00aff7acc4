"""Acceptance suite: one test per exit criterion, each printing a
PASS/FAIL line. Run with `pytest tests/test_acceptance.py -v -s`.
"""

import resource
import time
from datetime import datetime, timedelta, timezone

import numpy as np
import pytest

from pumpscan.detect import SETTINGS, cluster_events_from_mask, flag_masks
from pumpscan.evaluate import MatchConfig, match_events, metrics, render_report, sweep
from pumpscan.gates import (DEFAULT_RULES, EligibilityRule, RuleKind,
                            default_rule, is_eligible)
from pumpscan.ingestion import FetchPlan, RateLimiter, fetch_candles
from pumpscan.marketdata import to_epoch_hours
from pumpscan.rolling import RollingContext, context_arrays
from pumpscan.synth import ScenarioSpec, generate

from conftest import naive_contexts, random_series
from test_ingestion import MockClock, full_span_fixture

START = datetime(2024, 8, 15, tzinfo=timezone.utc)
EWMA10 = default_rule(RuleKind.EWMA, d_span=10)


def report(criterion, ok, detail=""):
    status = "PASS" if ok else "FAIL"
    print(f"\nACCEPTANCE {criterion}: {status}  {detail}")
    assert ok, f"criterion {criterion} failed: {detail}"


def test_criterion_1_blip_suppression():
    """Dormant+blip fixture: the gate, not the threshold, filters blips."""
    series, _ = generate(ScenarioSpec("BLP_USDT", 11, "blippy", 30))
    t0 = time.perf_counter()
    combined_total = 0
    vol_total = 0
    for setting in SETTINGS.values():
        ctx = context_arrays(series, d_span=10)
        for rule in DEFAULT_RULES:
            _, vol_anom, _, combined = flag_masks(series, ctx, setting, rule)
            combined_total += int(combined.sum())
            vol_total += int(vol_anom.sum())
    elapsed = time.perf_counter() - t0
    report(1, combined_total == 0 and vol_total > 0 and elapsed < 1.0,
           f"combined={combined_total} vol_flags={vol_total} "
           f"elapsed={elapsed:.3f}s")


def test_criterion_2_synthetic_recall():
    """50 injected pumps with x2 margins -> TP=50, FN=0, FP=0."""
    t0 = time.perf_counter()
    dataset, truth = [], []
    pump_offsets = (40, 75)  # days; spaced beyond the 30-day max window
    for k in range(25):
        pumps = tuple(START + timedelta(days=d, hours=6 + (k % 12))
                      for d in pump_offsets)
        series, t = generate(ScenarioSpec(
            f"P{k:02d}_USDT", 1000 + k, "regular", 110, base_price=1.0,
            base_hourly_volume=100.0, pump_times=pumps,
            pump_price_mult=4.0, pump_volume_mult=80.0))
        dataset.append(series)
        truth.extend(t)
    assert len(truth) == 50

    # verify the x2 margins against thresholds realized in the series
    setting = SETTINGS[4]
    for series in dataset:
        ctx = context_arrays(series, d_span=10)
        for h in np.flatnonzero(series.high > 2.5 * series.open):
            v = series.volume[h]
            assert series.high[h] >= 2 * (1 + setting.price_increase) * ctx.sma_open_12h[h]
            assert v >= 2 * (1 + setting.volume_increase) * ctx.sma_vol_12h[h]
            assert v >= 2 * 0.70 * ctx.ewma_d[h]
            assert v >= 2 * 0.60 * ctx.v_max_30d[h]

    reports = sweep(dataset, [setting], [EWMA10], truth)
    elapsed = time.perf_counter() - t0
    r = reports[0]
    report(2, r.true_positives == 50 and r.missed_events == 0
           and r.false_positive_events == 0 and elapsed < 10.0,
           f"TP={r.true_positives} FN={r.missed_events} "
           f"FP={r.false_positive_events} elapsed={elapsed:.2f}s")


def test_criterion_3_oracle_equivalence():
    """Streaming contexts match naive O(n*w) recomputation at 1e-9."""
    rng = np.random.default_rng(99)
    worst = 0.0
    for trial in range(100):
        s = random_series(rng, n=10_000,
                          start_hour=int(rng.integers(0, 48)),
                          with_gaps=bool(trial % 2))
        d_span = int(rng.choice([1, 5, 10, 20]))
        ctx = context_arrays(s, d_span=d_span)
        oracle = naive_contexts(s, d_span=d_span)
        for field, expected in oracle.items():
            got = np.asarray(getattr(ctx, field), dtype=float)
            expected = np.asarray(expected, dtype=float)
            scale = np.maximum(np.abs(expected), 1e-300)
            rel = np.max(np.abs(got - expected) / scale)
            worst = max(worst, rel)
            assert rel < 1e-9, f"{field} off by {rel} in trial {trial}"
    report(3, worst < 1e-9, f"worst relative error {worst:.2e} over 100x10k")


def test_criterion_4_gate_nesting_and_monotonicity():
    rng = np.random.default_rng(77)
    violations = 0
    for _ in range(10_000):
        ctx = RollingContext(
            float(rng.lognormal(0, 1)), float(rng.lognormal(0, 1)),
            float(rng.lognormal(3, 2)), float(rng.lognormal(2, 2)),
            float(rng.lognormal(1, 2)), float(rng.lognormal(1, 2)),
            float(rng.lognormal(0, 2)), 100, int(rng.integers(1, 31)))
        v = float(rng.lognormal(1, 2))
        alpha = float(rng.uniform(0, 5))

        # nesting: volatility-eligible implies ewma-eligible
        vol_rule = EligibilityRule(RuleKind.EWMA_VOLATILITY, 0.70, alpha=alpha)
        if is_eligible(v, ctx, vol_rule) and not is_eligible(v, ctx, EWMA10):
            violations += 1

        # fraction monotonicity: tighter rule eligible implies looser eligible
        kind = rng.choice(list(RuleKind))
        f_lo, f_hi = sorted(rng.uniform(0.05, 1.0, 2))
        m_lo, m_hi = sorted(rng.uniform(0.05, 1.0, 2))
        tight = EligibilityRule(kind, float(f_hi), float(m_hi), alpha=alpha)
        loose = EligibilityRule(kind, float(f_lo), float(m_lo), alpha=alpha)
        if is_eligible(v, ctx, tight) and not is_eligible(v, ctx, loose):
            violations += 1

        # exact volume-scale invariance
        c = float(rng.lognormal(0, 2))
        scaled = RollingContext(ctx.sma_open_12h, ctx.sma_vol_12h * c,
                                ctx.v_tot_30d * c, ctx.v_max_30d * c,
                                ctx.v_avg_daily * c, ctx.ewma_d * c,
                                ctx.sigma_daily * c, ctx.history_hours,
                                ctx.complete_days)
        for rule in DEFAULT_RULES:
            if is_eligible(v, ctx, rule) != is_eligible(v * c, scaled, rule):
                violations += 1
    report(4, violations == 0, f"{violations} violations in 10,000 trials")


def test_criterion_4b_price_scale_invariance():
    """Scaling all prices never changes a flag (companion to criterion 4)."""
    rng = np.random.default_rng(78)
    s = random_series(rng, n=3000, start_hour=0)
    from conftest import make_series
    c = 997.3
    scaled = make_series(s.symbol, s.start_hour, s.open * c, s.high * c,
                         s.low * c, s.close * c, s.volume, s.synthetic)
    ok = True
    for setting in SETTINGS.values():
        ctx_a = context_arrays(s, d_span=10)
        ctx_b = context_arrays(scaled, d_span=10)
        for rule in DEFAULT_RULES:
            a = flag_masks(s, ctx_a, setting, rule)
            b = flag_masks(scaled, ctx_b, setting, rule)
            ok &= all(np.array_equal(x, y) for x, y in zip(a, b))
    report("4b", ok, "price-scale invariance of all flags")


def test_criterion_5_paper_arithmetic_consistency():
    _, recall, _ = metrics(25, 5, 15)
    recall_ok = abs(recall - 0.62) <= 0.005 + 1e-12

    from pumpscan.evaluate import EvalReport
    row = EvalReport(4, "total_volume_30d", 4408, 2479, 335, 27, 13, 0,
                     0.0, 0.0, 0.0)
    text = render_report([row], "markdown")
    row_ok = "| Setting 4 | 4408 | 2479 | 335 | 27 | 13 |" in text
    byte_ok = render_report([row], "markdown") == text
    report(5, recall_ok and row_ok and byte_ok,
           f"recall(25,15)={recall:.4f}; row rendered byte-exact={row_ok}")


def test_criterion_6_setting_grid_ordering():
    rng = np.random.default_rng(55)
    ok = True
    for trial in range(5):
        corpus = [random_series(rng, n=4000, start_hour=int(rng.integers(0, 24)),
                                symbol=f"G{trial}{i}_USDT")
                  for i in range(3)]
        reports = sweep(corpus, tuple(SETTINGS.values()), [EWMA10], [])
        counts = {r.setting_id: r.price_anomaly_count for r in reports}
        ok &= counts[3] <= counts[4] <= counts[5]  # gamma_p 1.00 >= 0.90 >= 0.80
        ok &= counts[2] >= counts[1]               # open field: 0.70 <= 0.90
    report(6, ok, "price-anomaly counts monotone non-increasing in gamma_p")


def test_criterion_7_throughput():
    """Full 5x4 sweep over 4.3M candles in <60s and <1GB."""
    span_days = 163
    corpus = []
    for k in range(1100):
        profile = ("regular", "blippy", "dormant")[k % 3]
        kwargs = {"base_hourly_volume": 50.0} if profile == "regular" else {}
        series, _ = generate(ScenarioSpec(f"T{k:04d}_USDT", k, profile,
                                          span_days, **kwargs))
        corpus.append(series)
    total = sum(len(s) for s in corpus)
    assert total >= 4_300_000 and len(corpus) == 1100

    t0 = time.perf_counter()
    reports = sweep(corpus, tuple(SETTINGS.values()), DEFAULT_RULES, [])
    elapsed = time.perf_counter() - t0
    peak_mb = resource.getrusage(resource.RUSAGE_SELF).ru_maxrss / 1024
    report(7, len(reports) == 20 and elapsed < 60.0 and peak_mb < 1024,
           f"{total} candles, {elapsed:.2f}s, peak RSS {peak_mb:.0f} MB")


def test_criterion_8_ingestion_contract():
    end = datetime(2025, 2, 15, tzinfo=timezone.utc)
    plan = FetchPlan("X", START, end, chunk_size=480, max_rps=3)

    class TimedTransport:
        def __init__(self, inner, clock):
            self.inner, self.clock = inner, clock
            self.times = []

        def get(self, url, params):
            self.times.append(self.clock())
            return self.inner.get(url, params)

    def run(fail_statuses=()):
        clock = MockClock()
        inner = full_span_fixture("X", START, end)
        inner.fail_queue = list(fail_statuses)
        transport = TimedTransport(inner, clock)
        limiter = RateLimiter(3, clock, clock.sleep)
        series = fetch_candles(plan, "http://mock", transport, limiter,
                               sleep=clock.sleep)
        return series, transport.times

    series, times = run()
    requests_ok = len(times) == 10  # ceil(4416/480)
    rate_ok = all(
        sum(1 for u in times if t - 1.0 < u <= t) <= 3 for t in times)
    series_429, _ = run(fail_statuses=[429])
    retry_ok = series_429 == series
    report(8, requests_ok and rate_ok and retry_ok and len(series) == 4416,
           f"requests={len(times)} rate_contract={rate_ok} "
           f"429_transparent={retry_ok}")
