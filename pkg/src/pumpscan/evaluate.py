"""Scoring detections against ground truth and running configuration sweeps."""

from __future__ import annotations

import io
import json
from dataclasses import dataclass
from datetime import timedelta
from typing import Iterable, NamedTuple, Sequence

from .detect import (DEFAULT_CLUSTER_GAP_HOURS, DetectedEvent, SETTINGS,
                     ThresholdSetting, cluster_events_from_mask,
                     threshold_masks)
from .errors import EmptyDataset
from .gates import EligibilityRule, eligible_mask
from .marketdata import SymbolSeries
from .rolling import context_arrays

__all__ = ["MatchConfig", "MatchResult", "EvalReport", "match_events",
           "metrics", "sweep", "render_report"]

RULE_ORDER = ("total_volume_30d", "avg_daily", "ewma", "ewma_volatility")

RULE_LABELS = {
    "total_volume_30d": "30-day Total Volume",
    "avg_daily": "Average Daily Volume",
    "ewma": "EWMA",
    "ewma_volatility": "EWMA-Volatility",
}


@dataclass(frozen=True)
class MatchConfig:
    """Tolerance window around an announced pump time, in hours."""

    pre_tolerance: int = 1
    post_tolerance: int = 2

    def __post_init__(self):
        if self.pre_tolerance < 0 or self.post_tolerance < 0:
            raise ValueError("tolerances must be >= 0")


class MatchResult(NamedTuple):
    tp: int
    fn: int
    fp: int


@dataclass(frozen=True)
class EvalReport:
    setting_id: int
    rule_kind: str
    vol_anomaly_count: int
    price_anomaly_count: int
    combined_count: int
    true_positives: int
    missed_events: int
    false_positive_events: int
    precision: float
    recall: float
    f1: float


def match_events(detected: dict[str, Sequence[DetectedEvent]], truth,
                 cfg: MatchConfig = MatchConfig()) -> MatchResult:
    """Greedy earliest-first matching of detected events to truth events.

    A truth event is a true positive when some detected event on the same
    symbol overlaps [announce - pre_tolerance, announce + post_tolerance];
    each detected event can satisfy at most one truth event.
    """
    used: set[tuple[str, int]] = set()
    tp = 0
    truth_sorted = sorted(truth, key=lambda e: (e.announce_time, e.symbol))
    for event in truth_sorted:
        lo = event.announce_time - timedelta(hours=cfg.pre_tolerance)
        hi = event.announce_time + timedelta(hours=cfg.post_tolerance)
        candidates = detected.get(event.symbol, ())
        for i, det in enumerate(candidates):
            if (event.symbol, i) in used:
                continue
            if det.start <= hi and det.end >= lo:
                used.add((event.symbol, i))
                tp += 1
                break
    fn = len(truth_sorted) - tp
    total_detected = sum(len(v) for v in detected.values())
    fp = total_detected - tp
    return MatchResult(tp, fn, fp)


def metrics(tp: int, fp: int, fn: int) -> tuple[float, float, float]:
    """(precision, recall, f1) with 0/0 defined as 0."""
    precision = tp / (tp + fp) if tp + fp else 0.0
    recall = tp / (tp + fn) if tp + fn else 0.0
    f1 = (2 * precision * recall / (precision + recall)
          if precision + recall else 0.0)
    return precision, recall, f1


def sweep(dataset: Iterable[SymbolSeries],
          settings: Sequence[ThresholdSetting] = tuple(SETTINGS.values()),
          rules: Sequence[EligibilityRule] = (),
          truth=(), cfg: MatchConfig = MatchConfig(),
          window_days: int = 30,
          cluster_gap: int = DEFAULT_CLUSTER_GAP_HOURS) -> list[EvalReport]:
    """Run every (setting, rule) pair over all symbols and score the results.

    One rolling-context pass is shared per (symbol, d_span); price and
    volume threshold masks are shared per setting.
    """
    rules = tuple(rules)
    settings = tuple(settings)
    if not rules or not settings:
        raise ValueError("sweep needs at least one setting and one rule")

    counts = {(s.id, r.kind.value): [0, 0, 0] for s in settings for r in rules}
    detected: dict[tuple[int, str], dict[str, list[DetectedEvent]]] = {
        key: {} for key in counts
    }
    seen_symbols: set[str] = set()

    for series in dataset:
        seen_symbols.add(series.symbol)
        d_spans = sorted({r.d_span for r in rules if r.uses_ewma}) or [10]
        ctx_by_span = {d: context_arrays(series, d_span=d, window_days=window_days)
                       for d in d_spans}
        base_ctx = ctx_by_span[d_spans[0]]

        elig_by_rule = {}
        for rule in rules:
            ctx = ctx_by_span[rule.d_span] if rule.uses_ewma else base_ctx
            elig_by_rule[rule.kind.value] = eligible_mask(series.volume, ctx, rule)

        for setting in settings:
            warm, vol_anom, price_anom = threshold_masks(series, base_ctx, setting)
            for rule in rules:
                key = (setting.id, rule.kind.value)
                eligible = elig_by_rule[rule.kind.value] & warm
                combined = eligible & vol_anom & price_anom
                c = counts[key]
                c[0] += int((eligible & vol_anom).sum())
                c[1] += int(price_anom.sum())
                c[2] += int(combined.sum())
                events = cluster_events_from_mask(
                    combined, series.symbol, series, cluster_gap=cluster_gap)
                if events:
                    detected[key].setdefault(series.symbol, []).extend(events)

    if not seen_symbols:
        raise EmptyDataset("sweep received no symbols")

    truth_in_scope = [e for e in truth if e.symbol in seen_symbols]
    rule_pos = {kind: i for i, kind in enumerate(RULE_ORDER)}
    reports = []
    for setting in sorted(settings, key=lambda s: s.id):
        for rule in sorted(rules, key=lambda r: rule_pos[r.kind.value]):
            key = (setting.id, rule.kind.value)
            vol_c, price_c, comb_c = counts[key]
            tp, fn, fp = match_events(detected[key], truth_in_scope, cfg)
            precision, recall, f1 = metrics(tp, fp, fn)
            reports.append(EvalReport(
                setting_id=setting.id, rule_kind=rule.kind.value,
                vol_anomaly_count=vol_c, price_anomaly_count=price_c,
                combined_count=comb_c, true_positives=tp, missed_events=fn,
                false_positive_events=fp, precision=precision, recall=recall,
                f1=f1,
            ))
    return reports


def render_report(reports: Sequence[EvalReport], format: str = "markdown") -> str:
    """Render reports as markdown tables (one per rule), CSV, or JSON.

    Pure function of its inputs: identical reports yield identical bytes.
    """
    if not reports:
        raise ValueError("no reports to render")
    if format == "markdown":
        return _render_markdown(reports)
    if format == "csv":
        return _render_csv(reports)
    if format == "json":
        return _render_json(reports)
    raise ValueError(f"unknown format: {format}")


def _render_markdown(reports) -> str:
    out = io.StringIO()
    by_rule: dict[str, list[EvalReport]] = {}
    for r in reports:
        by_rule.setdefault(r.rule_kind, []).append(r)
    ordered = sorted(by_rule, key=lambda k: RULE_ORDER.index(k))
    for rule_kind in ordered:
        rows = sorted(by_rule[rule_kind], key=lambda r: r.setting_id)
        out.write(f"## {RULE_LABELS.get(rule_kind, rule_kind)}\n\n")
        out.write("| Thresholds | Vol Ano. | Price Ano. | Combined Ano. "
                  "| True Pos. | Missed | Precision | Recall | F1 |\n")
        out.write("|---|---|---|---|---|---|---|---|---|\n")
        for r in rows:
            out.write(
                f"| Setting {r.setting_id} | {r.vol_anomaly_count} "
                f"| {r.price_anomaly_count} | {r.combined_count} "
                f"| {r.true_positives} | {r.missed_events} "
                f"| {r.precision:.2f} | {r.recall:.2f} | {r.f1:.2f} |\n"
            )
        out.write("\n")
    return out.getvalue()


def _render_csv(reports) -> str:
    out = io.StringIO()
    out.write("setting_id,rule_kind,vol_anomaly_count,price_anomaly_count,"
              "combined_count,true_positives,missed_events,"
              "false_positive_events,precision,recall,f1\n")
    for r in reports:
        out.write(f"{r.setting_id},{r.rule_kind},{r.vol_anomaly_count},"
                  f"{r.price_anomaly_count},{r.combined_count},"
                  f"{r.true_positives},{r.missed_events},"
                  f"{r.false_positive_events},"
                  f"{r.precision:.6f},{r.recall:.6f},{r.f1:.6f}\n")
    return out.getvalue()


def _render_json(reports) -> str:
    return json.dumps([r.__dict__ for r in reports], indent=2,
                      sort_keys=True) + "\n"
