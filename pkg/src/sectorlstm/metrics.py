"""Forecast quality metrics: Huber loss, MAE and directional accuracy."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np

from .backtest import DatedValue, _check_predictions
from .engine.model import huber_loss
from .errors import EmptyInput, LengthMismatch


@dataclass(frozen=True)
class EvalReport:
    """Metrics for one stock: Huber loss on scaled prices, MAE in currency."""

    ticker: str
    huber_loss: float
    mae: float
    accuracy_score: float
    n_samples: int

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if self.huber_loss < 0 or self.mae < 0 or not 0 <= self.accuracy_score <= 1:
            raise ValueError(f"metric values out of range: {self}")

    def to_dict(self) -> dict:
        return asdict(self)


def _pair(actual, predicted) -> tuple[np.ndarray, np.ndarray]:
    a = np.asarray(actual, dtype=np.float64)
    p = np.asarray(predicted, dtype=np.float64)
    if a.shape != p.shape:
        raise LengthMismatch(f"{a.shape} actual vs {p.shape} predicted")
    if a.size == 0:
        raise EmptyInput("no samples")
    return a, p


def mae(actual: Sequence[float], predicted: Sequence[float]) -> float:
    a, p = _pair(actual, predicted)
    return float(np.mean(np.abs(a - p)))


def test_huber(actual_scaled: Sequence[float], predicted_scaled: Sequence[float], delta: float = 1.0) -> float:
    a, p = _pair(actual_scaled, predicted_scaled)
    return float(np.mean(huber_loss(p, a, delta)))


test_huber.__test__ = False  # not a pytest test despite the name


def direction_hits(actual: Sequence[DatedValue], predicted_for_next: Sequence[DatedValue]) -> list[bool]:
    """Per day: did the predicted move class (up vs. flat-or-down) match the realized one?"""
    _check_predictions(actual, predicted_for_next)
    hits = []
    for t, (_, p) in enumerate(predicted_for_next):
        today = actual[t][1]
        hits.append((p - today > 0) == (actual[t + 1][1] - today > 0))
    return hits


def accuracy_score(actual: Sequence[DatedValue], predicted_for_next: Sequence[DatedValue]) -> float:
    hits = direction_hits(actual, predicted_for_next)
    return sum(hits) / len(hits)


def evaluate(
    ticker: str,
    actual: Sequence[DatedValue],
    predicted_for_next: Sequence[DatedValue],
    actual_scaled: Sequence[float],
    predicted_scaled: Sequence[float],
    delta: float = 1.0,
) -> EvalReport:
    """Build an :class:`EvalReport`.

    ``actual`` holds the anchor day followed by every target day, so
    ``predicted_for_next[t]`` pairs with ``actual[t + 1]``; the scaled
    sequences cover the target days only.
    """
    acc = accuracy_score(actual, predicted_for_next)
    err = mae([c for _, c in actual[1:]], [p for _, p in predicted_for_next])
    hl = test_huber(actual_scaled, predicted_scaled, delta)
    return EvalReport(ticker, hl, err, acc, len(predicted_for_next))
