"""Daily OHLCV price history: parsing, validation, slicing and feed clients.

The on-disk format is a plain CSV with the exact header

    date,open,high,low,close,adj_close,volume

Remote quote services are reached only through a :class:`DataFeedClient`,
so the rest of the pipeline can run entirely from local files.
"""

from __future__ import annotations

import csv
import io
import logging
import math
import urllib.error
import urllib.request
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .errors import DuplicateDate, EmptySeries, FeedUnavailable, MalformedHeader

logger = logging.getLogger(__name__)

CSV_HEADER = ("date", "open", "high", "low", "close", "adj_close", "volume")
PRICE_FIELDS = ("open", "high", "low", "close")


@dataclass(frozen=True)
class Bar:
    date: date
    open: float
    high: float
    low: float
    close: float
    volume: float
    adj_close: Optional[float] = None

    def is_valid(self) -> bool:
        prices = (self.open, self.high, self.low, self.close)
        if not all(math.isfinite(p) and p > 0 for p in prices):
            return False
        if self.adj_close is not None and not (
            math.isfinite(self.adj_close) and self.adj_close > 0
        ):
            return False
        if not (math.isfinite(self.volume) and self.volume >= 0):
            return False
        return (
            self.low <= self.high
            and self.low <= self.open <= self.high
            and self.low <= self.close <= self.high
        )


@dataclass(frozen=True)
class PriceSeries:
    """Date-ordered daily bars for one ticker.

    ``dropped_rows`` records how many input rows were discarded while
    parsing; it does not take part in equality.
    """

    ticker: str
    bars: tuple[Bar, ...]
    dropped_rows: int = field(default=0, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "bars", tuple(self.bars))
        if not self.bars:
            raise EmptySeries(f"{self.ticker}: no bars")
        for prev, cur in zip(self.bars, self.bars[1:]):
            if cur.date <= prev.date:
                if cur.date == prev.date:
                    raise DuplicateDate(f"{self.ticker}: duplicate date {cur.date}")
                raise ValueError(f"{self.ticker}: bars not in date order at {cur.date}")

    def __len__(self) -> int:
        return len(self.bars)

    @property
    def dates(self) -> list[date]:
        return [b.date for b in self.bars]

    @property
    def first_date(self) -> date:
        return self.bars[0].date

    @property
    def last_date(self) -> date:
        return self.bars[-1].date

    def column(self, name: str) -> np.ndarray:
        """Return one bar field as a float64 array."""
        if name not in ("open", "high", "low", "close", "adj_close", "volume"):
            raise KeyError(name)
        values = [getattr(b, name) for b in self.bars]
        return np.array([np.nan if v is None else v for v in values], dtype=np.float64)

    def closes(self) -> np.ndarray:
        return self.column("close")


@dataclass(frozen=True)
class TickerSpec:
    symbol: str
    short_code: str
    index_weight: Optional[float] = None

    def __post_init__(self):
        if not self.symbol:
            raise ValueError("ticker symbol must be non-empty")
        if self.index_weight is not None and not 0 <= self.index_weight <= 100:
            raise ValueError(f"{self.symbol}: index_weight {self.index_weight} outside [0, 100]")


@dataclass(frozen=True)
class SectorSpec:
    name: str
    tickers: tuple[TickerSpec, ...]

    def __post_init__(self):
        object.__setattr__(self, "tickers", tuple(self.tickers))
        if not 1 <= len(self.tickers) <= 10:
            raise ValueError(f"sector {self.name!r} must hold 1-10 tickers, got {len(self.tickers)}")


@dataclass(frozen=True)
class UniverseConfig:
    sectors: tuple[SectorSpec, ...]
    start_date: date = date(2010, 1, 1)
    end_date: date = date(2021, 8, 26)
    split_date: date = date(2021, 1, 1)

    def __post_init__(self):
        object.__setattr__(self, "sectors", tuple(self.sectors))
        names = [s.name for s in self.sectors]
        if len(set(names)) != len(names):
            raise ValueError(f"sector names must be unique: {names}")
        if not self.start_date < self.split_date <= self.end_date:
            raise ValueError("expected start_date < split_date <= end_date")

    def tickers(self) -> list[TickerSpec]:
        """All tickers in declaration order, each symbol once."""
        seen: dict[str, TickerSpec] = {}
        for sector in self.sectors:
            for t in sector.tickers:
                seen.setdefault(t.symbol, t)
        return list(seen.values())


def _parse_float(text: str) -> Optional[float]:
    text = text.strip()
    if not text:
        return None
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def parse_bars(csv_text: str, ticker: str) -> PriceSeries:
    """Parse CSV text into a validated, date-sorted :class:`PriceSeries`.

    Rows with a missing or unparsable field, or which break the OHLC
    ordering constraints, are dropped; the count is kept on the result.
    """
    reader = csv.reader(io.StringIO(csv_text.lstrip("﻿")))
    header = next(reader, None)
    if header is None or tuple(h.strip() for h in header) != CSV_HEADER:
        raise MalformedHeader(f"{ticker}: expected header {','.join(CSV_HEADER)!r}, got {header!r}")

    bars: list[Bar] = []
    dropped = 0
    for row in reader:
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(CSV_HEADER):
            dropped += 1
            continue
        try:
            day = date.fromisoformat(row[0].strip())
        except ValueError:
            dropped += 1
            continue
        values = [_parse_float(cell) for cell in row[1:]]
        o, h, lo, c, adj, vol = values
        if any(v is None for v in (o, h, lo, c, vol)):
            dropped += 1
            continue
        bar = Bar(day, o, h, lo, c, vol, adj)
        if not bar.is_valid():
            dropped += 1
            continue
        bars.append(bar)

    if not bars:
        raise EmptySeries(f"{ticker}: no valid rows")
    bars.sort(key=lambda b: b.date)
    for prev, cur in zip(bars, bars[1:]):
        if prev.date == cur.date:
            raise DuplicateDate(f"{ticker}: duplicate date {cur.date}")
    if dropped:
        logger.warning("%s: dropped %d malformed row(s)", ticker, dropped)
    return PriceSeries(ticker, tuple(bars), dropped_rows=dropped)


def _fmt(value: Optional[float]) -> str:
    if value is None:
        return ""
    if float(value).is_integer() and abs(value) < 1e15:
        return str(int(value))
    return repr(float(value))


def serialize_bars(series: PriceSeries) -> str:
    """Render a series in the canonical CSV format (lossless for float64)."""
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(CSV_HEADER)
    for b in series.bars:
        writer.writerow([
            b.date.isoformat(), _fmt(b.open), _fmt(b.high), _fmt(b.low),
            _fmt(b.close), _fmt(b.adj_close), _fmt(b.volume),
        ])
    return out.getvalue()


def load_csv(path: str | Path, ticker: Optional[str] = None) -> PriceSeries:
    path = Path(path)
    return parse_bars(path.read_text(encoding="utf-8"), ticker or path.stem)


def slice_range(series: PriceSeries, start: date, end: date) -> PriceSeries:
    """Bars with ``start <= date <= end``, order preserved."""
    if start > end:
        raise ValueError(f"start {start} is after end {end}")
    kept = tuple(b for b in series.bars if start <= b.date <= end)
    if not kept:
        raise EmptySeries(f"{series.ticker}: no bars between {start} and {end}")
    return PriceSeries(series.ticker, kept, dropped_rows=series.dropped_rows)


def mean_close(series: PriceSeries | Sequence[float]) -> float:
    closes = series.closes() if isinstance(series, PriceSeries) else np.asarray(series, dtype=np.float64)
    if closes.size == 0:
        raise EmptySeries("mean of an empty series")
    return float(np.mean(closes))


class DataFeedClient(ABC):
    """Source of raw daily-bar CSV text for a ticker and date range.

    Implementations must raise :class:`FeedUnavailable` on transport
    failure. Concurrent calls for distinct tickers must be safe.
    """

    @abstractmethod
    def get_csv(self, ticker: str, start: date, end: date) -> str:
        ...


class FileFeedClient(DataFeedClient):
    """Serves ``<directory>/<ticker>.csv`` verbatim; used for offline runs and tests."""

    def __init__(self, directory: str | Path):
        self.directory = Path(directory)

    def get_csv(self, ticker: str, start: date, end: date) -> str:
        path = self.directory / f"{ticker}.csv"
        try:
            return path.read_text(encoding="utf-8")
        except OSError as exc:
            raise FeedUnavailable(f"{ticker}: cannot read {path}: {exc}") from exc


class HttpFeedClient(DataFeedClient):
    """Fetches CSV text from a URL template.

    The template is formatted with ``ticker``, ``start`` and ``end`` (ISO
    dates), e.g. ``https://quotes.example/{ticker}.csv?from={start}&to={end}``.
    The endpoint must already speak the canonical CSV schema.
    """

    def __init__(self, url_template: str, timeout: float = 30.0):
        self.url_template = url_template
        self.timeout = timeout

    def get_csv(self, ticker: str, start: date, end: date) -> str:
        url = self.url_template.format(ticker=ticker, start=start.isoformat(), end=end.isoformat())
        try:
            with urllib.request.urlopen(url, timeout=self.timeout) as resp:
                return resp.read().decode("utf-8")
        except (urllib.error.URLError, OSError, ValueError) as exc:
            raise FeedUnavailable(f"{ticker}: {url}: {exc}") from exc


def fetch_daily(client: DataFeedClient, ticker: str, start: date, end: date) -> PriceSeries:
    text = client.get_csv(ticker, start, end)
    return slice_range(parse_bars(text, ticker), start, end)
