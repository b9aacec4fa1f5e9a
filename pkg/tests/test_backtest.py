import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sectorlstm.backtest import (
    LEDGER_HEADER,
    Action,
    Signal,
    close_pairs,
    invert,
    ledger_csv,
    perfect_foresight_profit,
    profitability_ratio,
    round_half_away,
    run_backtest,
    signals_from_predictions,
    trade_profits,
)
from sectorlstm.errors import Misaligned, NonPositiveMeanPrice, SignalGap, TooShort

from conftest import business_days, series_from_closes

prices = st.lists(st.floats(1.0, 1000.0, allow_nan=False), min_size=2, max_size=30)


def dated(closes):
    return list(zip(business_days(len(closes)), map(float, closes)))


def predictions_for(actual, values):
    return [(actual[t + 1][0], float(v)) for t, v in enumerate(values)]


def all_signals(actual, actions):
    return [Signal(actual[t][0], a) for t, a in enumerate(actions)]


def test_worked_example():
    actual = dated([10, 12, 11, 13])
    sig = signals_from_predictions(actual, predictions_for(actual, [11, 11, 14]))
    assert [s.action for s in sig] == [Action.BUY, Action.SELL, Action.BUY]
    assert trade_profits(actual, sig) == [2.0, 1.0, 2.0]
    res = run_backtest(actual, sig, "X")
    assert (res.buy_profit, res.sell_profit, res.total_profit) == (4.0, 1.0, 5.0)
    assert res.mean_price == 11.5


def test_monotone_series():
    actual = dated([1, 2, 3, 4])
    buy = run_backtest(actual, all_signals(actual, [Action.BUY] * 3))
    sell = run_backtest(actual, all_signals(actual, [Action.SELL] * 3))
    assert buy.total_profit == 3.0 and buy.sell_profit == 0.0
    assert sell.total_profit == -3.0 and sell.buy_profit == 0.0


def test_tie_is_sell():
    actual = dated([5, 6])
    sig = signals_from_predictions(actual, predictions_for(actual, [5.0]))
    assert sig[0].action is Action.SELL
    assert run_backtest(actual, sig).total_profit == -1.0


def test_perfect_foresight_examples():
    assert perfect_foresight_profit(dated([1, 3, 2])) == 3.0
    assert perfect_foresight_profit(dated([7, 7, 7, 7])) == 0.0
    with pytest.raises(TooShort):
        perfect_foresight_profit(dated([1]))


def test_perfect_foresight_is_max_over_all_strategies():
    rng = np.random.default_rng(0)
    actual = dated(rng.uniform(50, 150, 10).round(2))
    best = max(
        run_backtest(actual, all_signals(actual, acts)).total_profit
        for acts in itertools.product([Action.BUY, Action.SELL], repeat=9)
    )
    assert best == pytest.approx(perfect_foresight_profit(actual), abs=1e-9)


@settings(max_examples=100, deadline=None)
@given(prices, st.data())
def test_inversion_negates(closes, data):
    actual = dated(closes)
    acts = data.draw(st.lists(st.sampled_from(list(Action)), min_size=len(closes) - 1, max_size=len(closes) - 1))
    sig = all_signals(actual, acts)
    a = run_backtest(actual, sig)
    b = run_backtest(actual, invert(sig))
    assert a.total_profit == pytest.approx(-b.total_profit, abs=1e-9)
    assert a.total_profit == pytest.approx(a.buy_profit + a.sell_profit, abs=1e-9)
    assert a.total_profit <= perfect_foresight_profit(actual) + 1e-9


@settings(max_examples=100, deadline=None)
@given(prices)
def test_oracle_predictions_reach_foresight_on_moves(closes):
    # predicting the true next close earns every up move and every down move
    actual = dated(closes)
    sig = signals_from_predictions(actual, predictions_for(actual, closes[1:]))
    assert run_backtest(actual, sig).total_profit == pytest.approx(perfect_foresight_profit(actual), abs=1e-9)


def test_ratio_display_matches_reference_rows():
    assert profitability_ratio(643746, 439)[1] == 1466
    assert profitability_ratio(173059, 116)[1] == 1492
    assert profitability_ratio(69307, 462)[1] == 150
    with pytest.raises(NonPositiveMeanPrice):
        profitability_ratio(10, 0)
    with pytest.raises(NonPositiveMeanPrice):
        profitability_ratio(10, -1)


@pytest.mark.parametrize("x,expected", [(2.5, 3), (-2.5, -3), (0.5, 1), (1.49, 1), (-0.4, 0), (0.0, 0)])
def test_round_half_away(x, expected):
    assert round_half_away(x) == expected


def test_alignment_errors():
    actual = dated([10, 11, 12])
    with pytest.raises(Misaligned):
        signals_from_predictions(actual, predictions_for(actual, [1.0]))
    shifted = [(actual[t][0], 1.0) for t in range(2)]
    with pytest.raises(Misaligned):
        signals_from_predictions(actual, shifted)
    with pytest.raises(TooShort):
        signals_from_predictions(actual[:1], [])
    with pytest.raises(SignalGap):
        run_backtest(actual, all_signals(actual, [Action.BUY]))
    wrong = [Signal(actual[t + 1][0], Action.BUY) for t in range(2)]
    with pytest.raises(Misaligned):
        run_backtest(actual, wrong)


def test_fsum_totals():
    actual = dated([0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7])
    res = run_backtest(actual, all_signals(actual, [Action.BUY] * 6))
    assert res.total_profit == math.fsum(actual[t + 1][1] - actual[t][1] for t in range(6))


def test_ledger_csv():
    actual = dated([10, 12, 11, 13])
    sig = signals_from_predictions(actual, predictions_for(actual, [11, 11, 14]))
    lines = ledger_csv(actual, sig).splitlines()
    assert lines[0] == ",".join(LEDGER_HEADER)
    assert len(lines) == 4
    assert lines[2].split(",")[1:] == ["Sell", "12.0", "11.0", "1.0"]


def test_close_pairs():
    s = series_from_closes([3, 4])
    assert close_pairs(s) == [(s.dates[0], 3.0), (s.dates[1], 4.0)]
