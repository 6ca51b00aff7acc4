"""Exchange API ingestion, candle persistence, and ground-truth loading.

All network traffic goes through a Transport object so tests replay
recorded fixtures; the rate limiter and backoff take an injectable clock.
"""

from __future__ import annotations

import csv
import os
import random
import threading
import time
from collections import deque
from dataclasses import dataclass
from datetime import datetime
from fractions import Fraction
from pathlib import Path
from typing import Callable, Protocol

from .errors import (ApiError, DecodeError, EmptyFile, EmptySeries, IoError,
                     MalformedRecord, NetworkError, PartialData,
                     RateLimitExhausted)
from .marketdata import (Candle, SymbolSeries, from_epoch_hours,
                         normalize_series, parse_timestamp, to_epoch_hours,
                         validate_candle)

DEFAULT_CHUNK_SIZE = 480
DEFAULT_MAX_RPS = 3.0
DEFAULT_MAX_RETRIES = 5
BASE_URL_ENV = "PUMPSCAN_BASE_URL"
DEFAULT_BASE_URL = "https://api.example-exchange.com"

CSV_HEADER = "timestamp,open,high,low,close,volume"

RETRYABLE_STATUSES = frozenset({429, 500, 502, 503, 504})


def base_url() -> str:
    return os.environ.get(BASE_URL_ENV, DEFAULT_BASE_URL)


@dataclass(frozen=True)
class FetchPlan:
    symbol: str
    start: datetime
    end: datetime
    chunk_size: int = DEFAULT_CHUNK_SIZE
    max_rps: float = DEFAULT_MAX_RPS
    max_retries: int = DEFAULT_MAX_RETRIES

    def __post_init__(self):
        if self.start >= self.end:
            raise ValueError("start must precede end")
        if self.chunk_size < 1:
            raise ValueError("chunk_size must be >= 1")
        if self.max_rps <= 0:
            raise ValueError("max_rps must be positive")
        if self.max_retries < 0:
            raise ValueError("max_retries must be >= 0")


@dataclass(frozen=True)
class GroundTruthEvent:
    symbol: str
    announce_time: datetime
    source: str


class Transport(Protocol):
    def get(self, url: str, params: dict) -> tuple[int, object]:
        """Issue a GET; returns (status_code, decoded JSON body)."""


class RequestsTransport:
    """Live HTTP transport backed by requests."""

    def __init__(self, timeout: float = 30.0):
        self.timeout = timeout

    def get(self, url, params):
        import requests

        try:
            resp = requests.get(url, params=params, timeout=self.timeout)
        except requests.RequestException as exc:
            raise NetworkError(str(exc)) from exc
        try:
            body = resp.json()
        except ValueError:
            body = resp.text
        return resp.status_code, body


class RateLimiter:
    """Sliding-window limiter: at most max_rps requests in any 1s window.

    Sub-1 rates widen the window instead (e.g. 0.5 rps -> 1 request per 2s).
    Thread-safe; one instance may be shared by concurrent symbol fetches.
    """

    def __init__(self, max_rps: float,
                 clock: Callable[[], float] = time.monotonic,
                 sleep: Callable[[float], None] = time.sleep):
        if max_rps <= 0:
            raise ValueError("max_rps must be positive")
        rate = Fraction(max_rps).limit_denominator(10**6)
        if rate >= 1:
            self.max_requests = int(rate)
            self.window = 1.0
        else:
            self.max_requests = 1
            self.window = float(1 / rate)
        self.clock = clock
        self.sleep = sleep
        self._stamps: deque[float] = deque()
        self._lock = threading.Lock()

    def acquire(self) -> None:
        while True:
            with self._lock:
                now = self.clock()
                while self._stamps and now - self._stamps[0] >= self.window:
                    self._stamps.popleft()
                if len(self._stamps) < self.max_requests:
                    self._stamps.append(now)
                    return
                wait = self.window - (now - self._stamps[0])
            self.sleep(max(wait, 1e-6))


def _request_with_retries(transport: Transport, url: str, params: dict,
                          max_retries: int, limiter: RateLimiter | None,
                          sleep: Callable[[float], None],
                          rng: random.Random) -> object:
    attempt = 0
    while True:
        if limiter is not None:
            limiter.acquire()
        status, body = transport.get(url, params)
        if 200 <= status < 300:
            return body
        if status in RETRYABLE_STATUSES:
            if attempt >= max_retries:
                raise RateLimitExhausted(
                    f"{url}: gave up after {max_retries} retries (HTTP {status})")
            # exponential backoff: 1s base, factor 2, +-20% jitter
            delay = (2 ** attempt) * rng.uniform(0.8, 1.2)
            sleep(delay)
            attempt += 1
            continue
        raise ApiError(status, body)


def list_markets(endpoint: str | None = None, transport: Transport | None = None,
                 limiter: RateLimiter | None = None, max_retries: int = DEFAULT_MAX_RETRIES,
                 sleep: Callable[[float], None] = time.sleep,
                 rng: random.Random | None = None) -> list[str]:
    """All listed trading pairs, lexicographically sorted."""
    endpoint = endpoint or base_url()
    transport = transport or RequestsTransport()
    rng = rng or random.Random()
    body = _request_with_retries(transport, f"{endpoint}/markets", {},
                                 max_retries, limiter, sleep, rng)
    if not isinstance(body, list):
        raise DecodeError(f"expected JSON array of markets, got {type(body).__name__}")
    symbols = []
    for item in body:
        if isinstance(item, str):
            symbols.append(item)
        elif isinstance(item, dict) and "symbol" in item:
            symbols.append(str(item["symbol"]))
        else:
            raise DecodeError(f"unexpected market entry: {item!r}")
    return sorted(symbols)


def _decode_candle_row(row) -> Candle:
    if not isinstance(row, (list, tuple)) or len(row) < 6:
        raise DecodeError(f"unexpected candle row: {row!r}")
    ts_raw = row[0]
    if isinstance(ts_raw, (int, float)):
        # epoch milliseconds
        ts = from_epoch_hours(int(ts_raw) // 1000 // 3600)
        if int(ts_raw) % 3_600_000:
            ts = datetime.fromtimestamp(int(ts_raw) / 1000, tz=ts.tzinfo)
    else:
        ts = parse_timestamp(str(ts_raw))
    return validate_candle((ts, row[1], row[2], row[3], row[4], row[5]))


def fetch_candles(plan: FetchPlan, endpoint: str | None = None,
                  transport: Transport | None = None,
                  limiter: RateLimiter | None = None,
                  sleep: Callable[[float], None] = time.sleep,
                  rng: random.Random | None = None,
                  strict: bool = True) -> SymbolSeries:
    """Download, validate, and normalize candles covering [start, end).

    Requests are chunked to plan.chunk_size candles and paced by the shared
    rate limiter. With strict=True a response that does not cover the span
    raises PartialData (the partial series rides on the exception).
    """
    endpoint = endpoint or base_url()
    transport = transport or RequestsTransport()
    if limiter is None:
        limiter = RateLimiter(plan.max_rps)
    rng = rng or random.Random()

    start_hour = to_epoch_hours(plan.start)
    end_hour = to_epoch_hours(plan.end)
    if to_epoch_hours(plan.end) * 3600 < plan.end.timestamp():
        end_hour += 1  # partial trailing hour still requested

    candles: list[Candle] = []
    chunk = plan.chunk_size
    for chunk_start in range(start_hour, end_hour, chunk):
        chunk_end = min(chunk_start + chunk, end_hour)
        params = {
            "symbol": plan.symbol,
            "interval": "1h",
            "startTime": chunk_start * 3_600_000,
            "endTime": chunk_end * 3_600_000,
            "limit": chunk,
        }
        body = _request_with_retries(transport, f"{endpoint}/candles", params,
                                     plan.max_retries, limiter, sleep, rng)
        if not isinstance(body, list):
            raise DecodeError(f"expected JSON array of candles, got {type(body).__name__}")
        for row in body:
            c = _decode_candle_row(row)
            h = to_epoch_hours(c.timestamp)
            if start_hour <= h < end_hour:
                candles.append(c)

    if not candles:
        raise PartialData(f"{plan.symbol}: server returned no candles in span")
    series = normalize_series(SymbolSeries.from_candles(plan.symbol, candles))
    if strict and (series.start_hour > start_hour
                   or series.start_hour + len(series) < end_hour):
        exc = PartialData(
            f"{plan.symbol}: got [{series.start_hour}, "
            f"{series.start_hour + len(series)}) of [{start_hour}, {end_hour})")
        exc.series = series
        raise exc
    return series


def format_timestamp(hour: int) -> str:
    return from_epoch_hours(hour).strftime("%Y-%m-%dT%H:%M:%SZ")


def store_series(series: SymbolSeries, directory) -> Path:
    """Write one `<symbol>.csv` in the candle CSV format (atomic replace)."""
    directory = Path(directory)
    try:
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / f"{series.symbol}.csv"
        tmp = path.with_suffix(".csv.tmp")
        with open(tmp, "w", newline="") as fh:
            fh.write(CSV_HEADER + "\n")
            for i in range(len(series)):
                # repr of a Python float round-trips bit-for-bit
                fh.write(f"{format_timestamp(series.hours[i])},"
                         f"{float(series.open[i])!r},{float(series.high[i])!r},"
                         f"{float(series.low[i])!r},{float(series.close[i])!r},"
                         f"{float(series.volume[i])!r}\n")
        os.replace(tmp, path)
    except OSError as exc:
        raise IoError(f"cannot store {series.symbol}: {exc}") from exc
    return path


def load_series(directory, symbol: str) -> SymbolSeries:
    """Read `<symbol>.csv` back into a normalized series."""
    path = Path(directory) / f"{symbol}.csv"
    if not path.exists():
        raise EmptySeries(f"no stored series for {symbol} in {directory}")
    candles = []
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header is None:
                raise EmptySeries(f"{path} is empty")
            if [h.strip() for h in header] != CSV_HEADER.split(","):
                raise MalformedRecord(f"{path}: bad header {header!r}")
            for lineno, row in enumerate(reader, start=2):
                if not row:
                    continue
                if len(row) != 6:
                    raise MalformedRecord(f"expected 6 columns, got {len(row)}",
                                          line=lineno)
                try:
                    candles.append(validate_candle(tuple(row)))
                except MalformedRecord as exc:
                    raise MalformedRecord(str(exc), line=lineno) from None
    except OSError as exc:
        raise IoError(f"cannot load {symbol}: {exc}") from exc
    if not candles:
        raise EmptySeries(f"{path} has no candle rows")
    return normalize_series(SymbolSeries.from_candles(symbol, candles))


def load_ground_truth(path) -> list[GroundTruthEvent]:
    """Parse a `symbol,announce_time,source` CSV into sorted, deduped events."""
    path = Path(path)
    if not path.exists():
        raise IoError(f"ground truth file not found: {path}")
    events: dict[tuple[str, int], GroundTruthEvent] = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise EmptyFile(f"{path} is empty")
        if [h.strip() for h in header] != ["symbol", "announce_time", "source"]:
            raise MalformedRecord(f"{path}: bad header {header!r}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise MalformedRecord(f"expected 3 columns, got {len(row)}",
                                      line=lineno)
            symbol, raw_time, source = (c.strip() for c in row)
            if not symbol:
                raise MalformedRecord("empty symbol", line=lineno)
            try:
                announce = parse_timestamp(raw_time)
            except MalformedRecord as exc:
                raise MalformedRecord(str(exc), line=lineno) from None
            key = (symbol, int(announce.timestamp()))
            events.setdefault(key, GroundTruthEvent(symbol, announce, source))
    if not events:
        raise EmptyFile(f"{path} has no event rows")
    return sorted(events.values(), key=lambda e: (e.announce_time, e.symbol))
