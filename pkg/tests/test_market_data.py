import itertools
from datetime import date

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sectorlstm.errors import DuplicateDate, EmptySeries, FeedUnavailable, MalformedHeader
from sectorlstm.market_data import (
    CSV_HEADER,
    DataFeedClient,
    FileFeedClient,
    TickerSpec,
    SectorSpec,
    UniverseConfig,
    fetch_daily,
    load_csv,
    mean_close,
    parse_bars,
    serialize_bars,
    slice_range,
)

from conftest import series_from_closes

HEADER = ",".join(CSV_HEADER)
ROWS3 = [
    "2021-01-04,10,11,9,10.5,10.5,100",
    "2021-01-05,10.5,12,10,11.5,11.5,200",
    "2021-01-06,11.5,12,11,11,,150",
]


def test_single_row():
    s = parse_bars(HEADER + "\n" + ROWS3[0] + "\n", "X")
    assert len(s) == 1
    assert s.bars[0].close == 10.5
    assert s.bars[0].adj_close == 10.5


def test_header_only_is_empty():
    with pytest.raises(EmptySeries):
        parse_bars(HEADER + "\n", "X")


@pytest.mark.parametrize("header", ["Date,Open,High,Low,Close,Adj Close,Volume",
                                    "date,open,high,low,close,volume", ""])
def test_bad_header(header):
    with pytest.raises(MalformedHeader):
        parse_bars(header + "\n" + ROWS3[0], "X")


@pytest.mark.parametrize("perm", list(itertools.permutations(range(3))))
def test_out_of_order_rows_sorted(perm):
    text = HEADER + "\n" + "\n".join(ROWS3[i] for i in perm) + "\n"
    s = parse_bars(text, "X")
    expected = sorted(r.split(",")[0] for r in ROWS3)
    assert [d.isoformat() for d in s.dates] == expected
    again = parse_bars(serialize_bars(s), "X")
    assert [d.isoformat() for d in again.dates] == expected
    assert again == s


def test_duplicate_date():
    with pytest.raises(DuplicateDate):
        parse_bars(HEADER + "\n" + ROWS3[0] + "\n" + ROWS3[0] + "\n", "X")


def test_invalid_rows_dropped_and_counted():
    bad = [
        "2021-01-07,11,12,10,,11,100",        # missing close
        "2021-01-08,11,10,12,11,11,100",      # low above high
        "2021-01-11,11,12,10,13,13,100",      # close above high
        "2021-01-12,-1,12,-2,11,11,100",      # non-positive price
        "2021-01-13,11,12,10,11,11,-5",       # negative volume
        "not-a-date,11,12,10,11,11,5",
    ]
    s = parse_bars(HEADER + "\n" + "\n".join(ROWS3 + bad) + "\n", "X")
    assert len(s) == 3
    assert s.dropped_rows == len(bad)


def test_goog_fixture_loads(goog_csv_path):
    s = load_csv(goog_csv_path)
    assert s.ticker == "GOOG"
    assert len(s) == 1047
    assert s.dropped_rows == 0
    assert all(a < b for a, b in zip(s.dates, s.dates[1:]))


def test_slice_range():
    s = series_from_closes(np.arange(1, 11))
    assert slice_range(s, s.first_date, s.last_date) == s
    sub = slice_range(s, s.dates[2], s.dates[6])
    assert len(sub) == len([d for d in s.dates if s.dates[2] <= d <= s.dates[6]]) == 5
    assert sub.dates == s.dates[2:7]
    with pytest.raises(EmptySeries):
        slice_range(s, date(1990, 1, 1), date(1990, 2, 1))


def test_mean_close():
    assert mean_close(series_from_closes([7, 7, 7])) == 7
    assert mean_close(series_from_closes([1, 2, 3])) == 2
    with pytest.raises(EmptySeries):
        mean_close([])


def test_mean_close_fixture(goog_csv_path):
    import csv
    with open(goog_csv_path) as fh:
        closes = [float(r["close"]) for r in csv.DictReader(fh)]
    total = 0.0
    for c in closes:
        total += c
    assert mean_close(load_csv(goog_csv_path)) == pytest.approx(total / len(closes), rel=1e-12)


class BrokenClient(DataFeedClient):
    def get_csv(self, ticker, start, end):
        raise FeedUnavailable("connection refused")


def test_fetch_daily_mock(tmp_path):
    rows = [f"2021-02-{d:02d},10,11,9,10,10,100" for d in range(1, 6)]
    (tmp_path / "AAA.csv").write_text(HEADER + "\n" + "\n".join(rows) + "\n")
    s = fetch_daily(FileFeedClient(tmp_path), "AAA", date(2021, 1, 1), date(2021, 12, 31))
    assert len(s) == 5


def test_fetch_daily_malformed_rows(tmp_path):
    good = [f"2021-02-{d:02d},10,11,9,10,10,100" for d in range(1, 6)]
    bad = ["2021-02-08,10,11,9,,10,100", "2021-02-09,10,9,11,10,10,100"]
    (tmp_path / "AAA.csv").write_text(HEADER + "\n" + "\n".join(good + bad) + "\n")
    s = fetch_daily(FileFeedClient(tmp_path), "AAA", date(2021, 1, 1), date(2021, 12, 31))
    assert len(s) == 5
    assert s.dropped_rows == 2


def test_fetch_daily_errors(tmp_path):
    with pytest.raises(FeedUnavailable):
        fetch_daily(BrokenClient(), "AAA", date(2021, 1, 1), date(2021, 2, 1))
    with pytest.raises(FeedUnavailable):
        fetch_daily(FileFeedClient(tmp_path), "MISSING", date(2021, 1, 1), date(2021, 2, 1))


def test_universe_invariants():
    t = TickerSpec("RELIANCE.NS", "RIL", 33.75)
    with pytest.raises(ValueError):
        TickerSpec("", "X")
    with pytest.raises(ValueError):
        TickerSpec("A", "A", 120.0)
    with pytest.raises(ValueError):
        SectorSpec("Energy", ())
    with pytest.raises(ValueError):
        SectorSpec("Energy", tuple(TickerSpec(f"T{i}", f"T{i}") for i in range(11)))
    sec = SectorSpec("Energy", (t,))
    with pytest.raises(ValueError):
        UniverseConfig((sec, sec))
    with pytest.raises(ValueError):
        UniverseConfig((sec,), date(2021, 1, 1), date(2021, 8, 26), date(2021, 1, 1))
    u = UniverseConfig((sec,))
    assert u.start_date == date(2010, 1, 1)


price = st.floats(min_value=0.01, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def bar_rows(draw):
    n = draw(st.integers(1, 20))
    days = draw(st.lists(st.dates(date(2000, 1, 1), date(2030, 1, 1)), min_size=n, max_size=n, unique=True))
    rows = []
    for d in days:
        vals = sorted(draw(st.lists(price, min_size=4, max_size=4)))
        lo, a, b, hi = vals
        o, c = (a, b) if draw(st.booleans()) else (b, a)
        vol = draw(st.integers(0, 10**9))
        rows.append(f"{d.isoformat()},{o!r},{hi!r},{lo!r},{c!r},{c!r},{vol}")
    return rows


@settings(max_examples=60, deadline=None)
@given(bar_rows())
def test_roundtrip_and_ordering(rows):
    s = parse_bars(HEADER + "\n" + "\n".join(rows) + "\n", "H")
    assert all(a < b for a, b in zip(s.dates, s.dates[1:]))
    assert parse_bars(serialize_bars(s), "H") == s
    assert slice_range(s, s.first_date, s.last_date) == s


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.5, 1000.0), min_size=2, max_size=30), st.data())
def test_mean_of_slice_within_bounds(closes, data):
    s = series_from_closes(closes)
    i = data.draw(st.integers(0, len(s) - 1))
    j = data.draw(st.integers(i, len(s) - 1))
    sub = slice_range(s, s.dates[i], s.dates[j])
    c = sub.closes()
    assert c.min() - 1e-9 <= mean_close(sub) <= c.max() + 1e-9
