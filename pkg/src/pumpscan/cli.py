"""Command-line entry point.

Runs are driven by a YAML config file; command-line flags override config
values. All outputs are written atomically (temp file + rename) so reruns
with identical inputs are byte-identical.
"""

from __future__ import annotations

import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import click
import yaml

from . import ingestion, synth
from .detect import (DEFAULT_CLUSTER_GAP_HOURS, SETTINGS, cluster_events_from_mask,
                     flag_masks)
from .errors import PumpscanError
from .evaluate import MatchConfig, render_report, sweep
from .gates import EligibilityRule, RuleKind, default_rule
from .ingestion import FetchPlan, load_ground_truth, load_series, store_series
from .marketdata import from_epoch_hours, parse_timestamp
from .rolling import context_arrays

RULE_CHOICES = [k.value for k in RuleKind]


@dataclass
class RunConfig:
    data_dir: str = "data"
    symbols: object = "all"           # "all" or explicit list
    settings: list = field(default_factory=lambda: [1, 2, 3, 4, 5])
    rules: list = field(default_factory=lambda: [
        {"kind": k.value, "d_span": 10, "alpha": 2.0} for k in RuleKind])
    lag_hours: int = 12
    window_days: int = 30
    cluster_gap: int = DEFAULT_CLUSTER_GAP_HOURS
    pre_tolerance: int = 1
    post_tolerance: int = 2
    truth: str | None = None
    out_dir: str = "out"
    formats: list = field(default_factory=lambda: ["markdown", "csv", "json"])
    jobs: int = 4


def load_config(path: str | None) -> RunConfig:
    cfg = RunConfig()
    if path:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
        for key, value in data.items():
            if not hasattr(cfg, key):
                raise click.UsageError(f"unknown config key: {key}")
            setattr(cfg, key, value)
    return cfg


def build_rules(cfg: RunConfig) -> list[EligibilityRule]:
    rules = []
    for spec in cfg.rules:
        if isinstance(spec, str):
            spec = {"kind": spec}
        kind = RuleKind(spec["kind"])
        rule = default_rule(kind, d_span=int(spec.get("d_span", 10)),
                            alpha=float(spec.get("alpha", 2.0)))
        if "frac_primary" in spec or "frac_max" in spec:
            rule = EligibilityRule(
                kind=kind,
                frac_primary=float(spec.get("frac_primary", rule.frac_primary)),
                frac_max=float(spec.get("frac_max", rule.frac_max)),
                d_span=rule.d_span, alpha=rule.alpha)
        rules.append(rule)
    return rules


def resolve_symbols(cfg: RunConfig) -> list[str]:
    data_dir = Path(cfg.data_dir)
    if cfg.symbols == "all":
        return sorted(p.stem for p in data_dir.glob("*.csv") if p.stem != "truth")
    return list(cfg.symbols)


def load_all(cfg: RunConfig, symbols: list[str]):
    with ThreadPoolExecutor(max_workers=max(1, cfg.jobs)) as pool:
        return list(pool.map(lambda s: load_series(cfg.data_dir, s), symbols))


def atomic_write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text)
    os.replace(tmp, path)


@click.group()
def main():
    """Pump-and-dump detection over hourly OHLCV candles."""


@main.command()
@click.option("--base-url", default=None, help="Exchange API base URL.")
def markets(base_url):
    """List all trading pairs on the exchange."""
    for symbol in ingestion.list_markets(base_url):
        click.echo(symbol)


@main.command()
@click.option("--symbol", required=True)
@click.option("--start", required=True, help="RFC3339 UTC start of span.")
@click.option("--end", required=True, help="RFC3339 UTC end of span (exclusive).")
@click.option("--data-dir", default="data", show_default=True)
@click.option("--base-url", default=None)
@click.option("--chunk-size", default=ingestion.DEFAULT_CHUNK_SIZE, show_default=True)
@click.option("--max-rps", default=ingestion.DEFAULT_MAX_RPS, show_default=True)
@click.option("--max-retries", default=ingestion.DEFAULT_MAX_RETRIES, show_default=True)
def fetch(symbol, start, end, data_dir, base_url, chunk_size, max_rps, max_retries):
    """Download a candle span and store it as <symbol>.csv."""
    plan = FetchPlan(symbol, parse_timestamp(start), parse_timestamp(end),
                     chunk_size=chunk_size, max_rps=max_rps,
                     max_retries=max_retries)
    series = ingestion.fetch_candles(plan, base_url)
    path = store_series(series, data_dir)
    click.echo(f"stored {len(series)} candles to {path}")


def _flags_csv(series, ctx, eligible, vol_anom, price_anom, combined, setting):
    price = series.high if setting.price_field == "high" else series.open
    lines = ["timestamp,eligible,volume_anomaly,price_anomaly,combined,"
             "price_ratio,volume_ratio"]
    for i in range(len(series)):
        pr = (f"{price[i] / ctx.sma_open_12h[i]:.6f}"
              if ctx.sma_open_12h[i] > 0 else "")
        vr = (f"{series.volume[i] / ctx.sma_vol_12h[i]:.6f}"
              if ctx.sma_vol_12h[i] > 0 else "")
        ts = from_epoch_hours(series.hours[i]).strftime("%Y-%m-%dT%H:%M:%SZ")
        lines.append(f"{ts},{int(eligible[i])},{int(vol_anom[i])},"
                     f"{int(price_anom[i])},{int(combined[i])},{pr},{vr}")
    return "\n".join(lines) + "\n"


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--data-dir", default=None)
@click.option("--symbol", required=True)
@click.option("--setting", type=click.IntRange(1, 5), default=4, show_default=True)
@click.option("--rule", type=click.Choice(RULE_CHOICES), default="ewma", show_default=True)
@click.option("--d-span", default=10, show_default=True)
@click.option("--alpha", default=2.0, show_default=True)
@click.option("--lag-hours", default=None, type=int)
@click.option("--cluster-gap", default=None, type=int)
@click.option("--emit-flags", "emit_flags", default=None, type=click.Path(),
              help="Write the per-candle flag CSV here.")
@click.option("--emit-series", "emit_series", default=None, type=click.Path(),
              help="Write the normalized series CSV here (plot-ready).")
def detect(config_path, data_dir, symbol, setting, rule, d_span, alpha,
           lag_hours, cluster_gap, emit_flags, emit_series):
    """Detect anomalies for one symbol under one setting and gate."""
    cfg = load_config(config_path)
    if data_dir:
        cfg.data_dir = data_dir
    if lag_hours:
        cfg.lag_hours = lag_hours
    if cluster_gap is not None:
        cfg.cluster_gap = cluster_gap

    series = load_series(cfg.data_dir, symbol)
    the_setting = SETTINGS[setting]
    the_rule = default_rule(RuleKind(rule), d_span=d_span, alpha=alpha)
    ctx = context_arrays(series, d_span=the_rule.d_span,
                         window_days=cfg.window_days,
                         lag_hours=the_setting.lag_hours)
    eligible, vol_anom, price_anom, combined = flag_masks(
        series, ctx, the_setting, the_rule)
    events = cluster_events_from_mask(combined, symbol, series,
                                      cluster_gap=cfg.cluster_gap)
    if emit_flags:
        atomic_write(Path(emit_flags), _flags_csv(
            series, ctx, eligible, vol_anom, price_anom, combined, the_setting))
    if emit_series:
        store_series(series, Path(emit_series).parent or Path("."))
    click.echo(f"{symbol}: {int(combined.sum())} combined-anomalous candles, "
               f"{len(events)} events")
    for e in events:
        click.echo(f"  {e.start.isoformat()} .. {e.end.isoformat()} "
                   f"peak_volume={e.peak_candle.volume}")


def _run_sweep(cfg: RunConfig, settings_filter=None, rules_filter=None):
    symbols = resolve_symbols(cfg)
    if not symbols:
        raise PumpscanError(f"no symbol CSVs in {cfg.data_dir}")
    dataset = load_all(cfg, symbols)
    setting_ids = settings_filter or cfg.settings
    settings = [SETTINGS[int(i)] for i in setting_ids]
    rules = build_rules(cfg)
    if rules_filter:
        rules = [r for r in rules if r.kind.value in rules_filter]
    truth = load_ground_truth(cfg.truth) if cfg.truth else []
    reports = sweep(dataset, settings, rules, truth,
                    MatchConfig(cfg.pre_tolerance, cfg.post_tolerance),
                    window_days=cfg.window_days, cluster_gap=cfg.cluster_gap)
    return reports


def _write_reports(cfg: RunConfig, reports):
    out_dir = Path(cfg.out_dir)
    ext = {"markdown": "md", "csv": "csv", "json": "json"}
    for fmt in cfg.formats:
        atomic_write(out_dir / f"report.{ext[fmt]}", render_report(reports, fmt))
    click.echo(f"wrote {len(reports)} report rows to {out_dir}/")


@main.command("sweep")
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--data-dir", default=None)
@click.option("--truth", default=None, type=click.Path(exists=True))
@click.option("--out-dir", default=None)
@click.option("--jobs", default=None, type=int)
def sweep_cmd(config_path, data_dir, truth, out_dir, jobs):
    """Run the full settings x gates grid and write report files."""
    cfg = load_config(config_path)
    if data_dir:
        cfg.data_dir = data_dir
    if truth:
        cfg.truth = truth
    if out_dir:
        cfg.out_dir = out_dir
    if jobs:
        cfg.jobs = jobs
    reports = _run_sweep(cfg)
    _write_reports(cfg, reports)


@main.command()
@click.option("--config", "config_path", default=None, type=click.Path(exists=True))
@click.option("--data-dir", default=None)
@click.option("--truth", required=True, type=click.Path(exists=True))
@click.option("--setting", type=click.IntRange(1, 5), default=4, show_default=True)
@click.option("--rule", type=click.Choice(RULE_CHOICES), default="ewma", show_default=True)
@click.option("--out-dir", default=None)
def evaluate(config_path, data_dir, truth, setting, rule, out_dir):
    """Score one setting/gate pair against a ground-truth file."""
    cfg = load_config(config_path)
    if data_dir:
        cfg.data_dir = data_dir
    cfg.truth = truth
    if out_dir:
        cfg.out_dir = out_dir
    reports = _run_sweep(cfg, settings_filter=[setting], rules_filter=[rule])
    click.echo(render_report(reports, "markdown"), nl=False)
    if out_dir:
        _write_reports(cfg, reports)


@main.command()
@click.option("--in", "in_path", required=True, type=click.Path(exists=True),
              help="report.json produced by sweep.")
@click.option("--format", "fmt", type=click.Choice(["markdown", "csv", "json"]),
              default="markdown", show_default=True)
def report(in_path, fmt):
    """Re-render a stored report.json in another format."""
    import json

    from .evaluate import EvalReport

    rows = json.loads(Path(in_path).read_text())
    reports = [EvalReport(**row) for row in rows]
    click.echo(render_report(reports, fmt), nl=False)


@main.command("synth")
@click.option("--config", "config_path", required=True, type=click.Path(exists=True),
              help="YAML file with a `scenarios:` list.")
@click.option("--out-dir", default="data", show_default=True)
def synth_cmd(config_path, out_dir):
    """Generate a synthetic corpus (symbol CSVs plus truth.csv)."""
    with open(config_path) as fh:
        data = yaml.safe_load(fh) or {}
    specs = []
    for raw in data.get("scenarios", []):
        raw = dict(raw)
        raw["pump_times"] = tuple(
            parse_timestamp(t) for t in raw.get("pump_times", ()))
        if "start" in raw:
            raw["start"] = parse_timestamp(raw["start"])
        specs.append(synth.ScenarioSpec(**raw))
    if not specs:
        raise click.UsageError("config has no scenarios")
    directory, count = synth.write_corpus(specs, out_dir)
    click.echo(f"wrote {count} symbols to {directory}/")


def entrypoint(argv=None) -> int:
    try:
        main.main(args=argv, standalone_mode=False)
        return 0
    except click.UsageError as exc:
        click.echo(f"usage error: {exc.format_message()}", err=True)
        return 2
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.Abort:
        return 1
    except PumpscanError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1


if __name__ == "__main__":
    sys.exit(entrypoint())
