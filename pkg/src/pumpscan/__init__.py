"""pumpscan: pump-and-dump detection for hourly OHLCV candle series.

Pipeline: ingest (or synthesize) candles -> rolling trailing statistics ->
volume-eligibility gate + price/volume thresholds -> event clustering ->
evaluation against ground-truth pump announcements.
"""

from ._kernels import BACKEND
from .detect import SETTINGS, ThresholdSetting, detect_series, cluster_events
from .evaluate import EvalReport, MatchConfig, match_events, metrics, render_report, sweep
from .gates import DEFAULT_RULES, EligibilityRule, RuleKind, is_eligible
from .marketdata import Candle, DailyTotal, SymbolSeries, daily_totals, normalize_series, validate_candle
from .rolling import RollingContext, build_contexts, ewma_daily
from .synth import ScenarioSpec, generate

__version__ = "0.1.0"
