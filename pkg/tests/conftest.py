from datetime import date, timedelta
from pathlib import Path

import numpy as np
import pytest

from sectorlstm.market_data import Bar, PriceSeries

DATA_DIR = Path(__file__).parent / "data"


def business_days(n, start=date(2000, 1, 3)):
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def series_from_closes(closes, ticker="TST", start=date(2000, 1, 3)):
    days = business_days(len(closes), start)
    return PriceSeries(ticker, tuple(Bar(d, c, c, c, c, 1000.0) for d, c in zip(days, map(float, closes))))


def sine_series(n=500, period=40, ticker="SINE"):
    t = np.arange(n)
    return series_from_closes(100.0 + 10.0 * np.sin(2 * np.pi * t / period), ticker)


@pytest.fixture
def goog_csv_path():
    return DATA_DIR / "GOOG.csv"
