import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sectorlstm.backtest import run_backtest, signals_from_predictions, trade_profits
from sectorlstm.errors import EmptyInput, LengthMismatch, Misaligned
from sectorlstm.metrics import EvalReport, accuracy_score, direction_hits, evaluate, mae, test_huber

from conftest import business_days


def dated(closes):
    return list(zip(business_days(len(closes)), map(float, closes)))


def preds(actual, values):
    return [(actual[t + 1][0], float(v)) for t, v in enumerate(values)]


def test_mae_examples():
    assert mae([1, 2, 3], [1, 2, 3]) == 0.0
    assert mae([1, 2, 3], [2, 2, 2]) == pytest.approx(2 / 3, abs=1e-15)
    with pytest.raises(LengthMismatch):
        mae([1, 2], [1])
    with pytest.raises(EmptyInput):
        mae([], [])


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-1e4, 1e4), st.floats(-1e4, 1e4)), min_size=1, max_size=50))
def test_mae_matches_loop(pairs):
    a = [p[0] for p in pairs]
    b = [p[1] for p in pairs]
    total = 0.0
    for x, y in pairs:
        total += abs(x - y)
    assert mae(a, b) == pytest.approx(total / len(pairs), rel=1e-12, abs=1e-9)


def test_huber_metric_examples():
    assert test_huber([0.3, 0.4], [0.3, 0.4]) == 0.0
    assert test_huber([0.0], [0.5]) == 0.125
    # one quadratic and one linear sample
    assert test_huber([0.0, 0.0], [0.5, 2.0], 1.0) == pytest.approx((0.125 + 1.5) / 2, abs=1e-15)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=30), st.floats(0.05, 3))
def test_huber_matches_piecewise_oracle(pairs, delta):
    vals = []
    for a, p in pairs:
        e = abs(p - a)
        vals.append(0.5 * e * e if e <= delta else delta * (e - 0.5 * delta))
    got = test_huber([a for a, _ in pairs], [p for _, p in pairs], delta)
    assert got == pytest.approx(sum(vals) / len(vals), rel=1e-12, abs=1e-15)


def test_accuracy_examples():
    actual = dated([10, 12, 11, 13])
    assert accuracy_score(actual, preds(actual, [11, 13, 10])) == pytest.approx(1 / 3)
    assert accuracy_score(actual, preds(actual, [12, 11, 13])) == 1.0
    assert accuracy_score(actual, preds(actual, [9, 13, 10])) == 0.0


def test_accuracy_zero_move_is_down():
    actual = dated([10, 10])
    assert direction_hits(actual, preds(actual, [9])) == [True]
    assert direction_hits(actual, preds(actual, [10])) == [True]
    assert direction_hits(actual, preds(actual, [11])) == [False]


def test_accuracy_alignment():
    actual = dated([10, 12, 11])
    with pytest.raises(Misaligned):
        accuracy_score(actual, preds(actual, [1]))


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1, 100), min_size=3, max_size=30), st.floats(1.1, 10), st.floats(-50, 50))
def test_accuracy_invariant_under_affine_maps(closes, k, shift):
    actual = dated(closes)
    guesses = [c * 1.01 for c in closes[:-1]]
    base = accuracy_score(actual, preds(actual, guesses))
    moved = [(d, k * c + shift) for d, c in actual]
    assert accuracy_score(moved, preds(moved, [k * g + shift for g in guesses])) == base


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(1, 100), min_size=3, max_size=30), st.data())
def test_accuracy_consistent_with_trade_profits(closes, data):
    # on days with a nonzero move, a directional hit is exactly a profitable trade
    actual = dated(closes)
    guesses = data.draw(st.lists(st.floats(1, 100), min_size=len(closes) - 1, max_size=len(closes) - 1))
    p = preds(actual, guesses)
    hits = direction_hits(actual, p)
    profits = trade_profits(actual, signals_from_predictions(actual, p))
    for t, (h, pr) in enumerate(zip(hits, profits)):
        if actual[t + 1][1] != actual[t][1]:
            assert h == (pr > 0)


def test_mirror_prediction_flips_strict_moves():
    actual = dated([10, 12, 11, 13, 12])
    good = preds(actual, [12, 11, 13, 12])
    mirrored = [(d, 2 * actual[t][1] - v) for t, (d, v) in enumerate(good)]
    assert accuracy_score(actual, good) == 1.0
    assert accuracy_score(actual, mirrored) == 0.0
    assert run_backtest(actual, signals_from_predictions(actual, mirrored)).total_profit == -run_backtest(
        actual, signals_from_predictions(actual, good)).total_profit


def test_evaluate():
    actual = dated([10, 12, 11, 13])
    p = preds(actual, [11, 13, 10])
    rep = evaluate("X", actual, p, [0.2, 0.1, 0.3], [0.2, 0.1, 0.3])
    assert (rep.ticker, rep.huber_loss, rep.mae, rep.n_samples) == ("X", 0.0, 2.0, 3)
    assert rep.accuracy_score == pytest.approx(1 / 3)
    with pytest.raises(ValueError):
        EvalReport("X", -1.0, 0.0, 0.5, 1)
    with pytest.raises(ValueError):
        EvalReport("X", 0.0, 0.0, 0.5, 0)
    assert np.isclose(rep.to_dict()["accuracy_score"], 1 / 3)
