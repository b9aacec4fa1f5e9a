"""Mandatory daily buy/sell strategy driven by next-day predictions.

Every trading day except the last, the investor either buys one share
(predicted next close above today's close) or sells one share (predicted
next close at or below today's close), and closes the position on the
next day. There are no costs and no carried positions.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .errors import Misaligned, NonPositiveMeanPrice, SignalGap, TooShort
from .market_data import PriceSeries

DatedValue = tuple[date, float]


class Action(str, Enum):
    BUY = "Buy"
    SELL = "Sell"

    def inverted(self) -> "Action":
        return Action.SELL if self is Action.BUY else Action.BUY


@dataclass(frozen=True)
class Signal:
    date: date
    action: Action


@dataclass(frozen=True)
class ProfitSummary:
    ticker: str
    buy_profit: float
    sell_profit: float
    total_profit: float
    mean_price: float
    ratio: float
    ratio_display: int

    @classmethod
    def build(cls, ticker: str, buy_profit: float, sell_profit: float, mean_price: float) -> "ProfitSummary":
        total = buy_profit + sell_profit
        ratio, display = profitability_ratio(total, mean_price)
        return cls(ticker, buy_profit, sell_profit, total, mean_price, ratio, display)


def round_half_away(x: float) -> int:
    """Round to the nearest integer, halves away from zero (2.5 -> 3, -2.5 -> -3)."""
    return int(math.copysign(math.floor(abs(x) + 0.5), x))


def close_pairs(series: PriceSeries) -> list[DatedValue]:
    return [(b.date, b.close) for b in series.bars]


def _check_predictions(actual: Sequence[DatedValue], predicted: Sequence[DatedValue]) -> None:
    if len(actual) < 2:
        raise TooShort(f"need at least 2 actual closes, got {len(actual)}")
    if len(predicted) != len(actual) - 1:
        raise Misaligned(f"expected {len(actual) - 1} next-day predictions, got {len(predicted)}")
    for t, (pd, _) in enumerate(predicted):
        if pd != actual[t + 1][0]:
            raise Misaligned(f"prediction {t} is for {pd}, expected {actual[t + 1][0]}")


def signals_from_predictions(actual: Sequence[DatedValue], predicted: Sequence[DatedValue]) -> list[Signal]:
    """``predicted[t]`` is the forecast for ``actual[t + 1]``, known on day ``t``.

    Buy when the forecast is strictly above today's close, otherwise Sell.
    """
    _check_predictions(actual, predicted)
    return [
        Signal(actual[t][0], Action.BUY if p > actual[t][1] else Action.SELL)
        for t, (_, p) in enumerate(predicted)
    ]


def invert(signals: Iterable[Signal]) -> list[Signal]:
    return [Signal(s.date, s.action.inverted()) for s in signals]


def _check_signals(actual: Sequence[DatedValue], signals: Sequence[Signal]) -> None:
    if len(actual) < 2:
        raise TooShort(f"need at least 2 actual closes, got {len(actual)}")
    if len(signals) != len(actual) - 1:
        raise SignalGap(f"expected {len(actual) - 1} signals, got {len(signals)}")
    for t, s in enumerate(signals):
        if s.date != actual[t][0]:
            raise Misaligned(f"signal {t} dated {s.date}, expected {actual[t][0]}")


def trade_profits(actual: Sequence[DatedValue], signals: Sequence[Signal]) -> list[float]:
    """Per-day profit of the unit-share round trip chosen by each signal."""
    _check_signals(actual, signals)
    out = []
    for t, s in enumerate(signals):
        move = actual[t + 1][1] - actual[t][1]
        out.append(move if s.action is Action.BUY else -move)
    return out


def run_backtest(actual: Sequence[DatedValue], signals: Sequence[Signal], ticker: str = "") -> ProfitSummary:
    profits = trade_profits(actual, signals)
    buys = [p for p, s in zip(profits, signals) if s.action is Action.BUY]
    sells = [p for p, s in zip(profits, signals) if s.action is Action.SELL]
    mean_price = float(np.mean([c for _, c in actual]))
    return ProfitSummary.build(ticker, math.fsum(buys), math.fsum(sells), mean_price)


def perfect_foresight_profit(actual: Sequence[DatedValue]) -> float:
    """Upper bound on total profit: every daily move captured in absolute value."""
    if len(actual) < 2:
        raise TooShort(f"need at least 2 actual closes, got {len(actual)}")
    return math.fsum(abs(actual[t + 1][1] - actual[t][1]) for t in range(len(actual) - 1))


def profitability_ratio(total_profit: float, mean_price: float) -> tuple[float, int]:
    if not mean_price > 0:
        raise NonPositiveMeanPrice(f"mean price must be positive, got {mean_price}")
    ratio = total_profit / mean_price
    return ratio, round_half_away(ratio)


LEDGER_HEADER = ("date", "action", "actual_close", "next_close", "trade_profit")


def ledger_csv(actual: Sequence[DatedValue], signals: Sequence[Signal]) -> str:
    """Audit trail, one row per signal."""
    profits = trade_profits(actual, signals)
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(LEDGER_HEADER)
    for t, (s, p) in enumerate(zip(signals, profits)):
        writer.writerow([s.date.isoformat(), s.action.value, repr(actual[t][1]), repr(actual[t + 1][1]), repr(p)])
    return out.getvalue()
