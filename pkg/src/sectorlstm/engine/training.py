"""Mini-batch training, prediction and hyperparameter grid search."""

from __future__ import annotations

import csv
import io
import itertools
import logging
import math
from dataclasses import dataclass, field, replace
from datetime import date
from typing import Any, Callable, Optional, Sequence

import numpy as np

from ..dataset import ScalerParams, WindowedDataset, inverse_scale, scale, split_validation, TARGET
from ..errors import EmptyDataset, GridTooLarge, InsufficientData, ScalerMismatch
from ..market_data import PriceSeries
from .model import ModelConfig, ModelParams, backward, forward_batch, huber_loss, init_params
from .optim import OptimizerState, adam_step

logger = logging.getLogger(__name__)

PREDICT_CHUNK = 512


@dataclass
class TrainHistory:
    train_loss: list[float] = field(default_factory=list)
    val_loss: list[float] = field(default_factory=list)
    val_mae: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.train_loss)

    def to_csv(self) -> str:
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        writer.writerow(["epoch", "train_loss", "val_loss", "val_mae"])
        for k, row in enumerate(zip(self.train_loss, self.val_loss, self.val_mae), start=1):
            writer.writerow([k, *(repr(float(v)) for v in row)])
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str) -> "TrainHistory":
        rows = list(csv.DictReader(io.StringIO(text)))
        return cls(
            [float(r["train_loss"]) for r in rows],
            [float(r["val_loss"]) for r in rows],
            [float(r["val_mae"]) for r in rows],
        )


def training_rng(seed: int) -> np.random.Generator:
    # separate stream from init_params, which draws from default_rng(seed)
    return np.random.default_rng([seed, 1])


def predict_scaled(params: ModelParams, inputs: np.ndarray) -> np.ndarray:
    """Inference-mode network outputs for a stack of windows."""
    inputs = np.asarray(inputs, dtype=np.float64)
    if len(inputs) == 0:
        return np.empty(0)
    parts = [forward_batch(params, inputs[k:k + PREDICT_CHUNK], "infer")[0]
             for k in range(0, len(inputs), PREDICT_CHUNK)]
    return np.concatenate(parts)


def train(
    dataset: WindowedDataset,
    config: ModelConfig,
    validation_fraction: float = 0.1,
    on_epoch: Optional[Callable[[int, TrainHistory], None]] = None,
) -> tuple[ModelParams, TrainHistory]:
    """Fit a fresh model on ``dataset``.

    The final ``validation_fraction`` of windows (chronological) is held out
    and scored after every epoch with dropout disabled. Training windows are
    reshuffled each epoch from the config seed; the last batch may be short.
    """
    if dataset.inputs.shape[1:] != (config.lookback, config.feature_count):
        raise ScalerMismatch(
            f"dataset windows {dataset.inputs.shape[1:]} do not fit config "
            f"({config.lookback}, {config.feature_count})"
        )
    if len(dataset) == 0:
        raise EmptyDataset("no training windows")
    train_ds, val_ds = split_validation(dataset, validation_fraction)
    if len(train_ds) == 0:
        raise EmptyDataset("no training windows left after validation hold-out")

    rng = training_rng(config.seed)
    params = init_params(config)
    state = OptimizerState.zeros(params)
    history = TrainHistory()
    X, y = train_ds.inputs, train_ds.targets
    n = len(train_ds)
    delta = config.huber_delta

    for epoch in range(config.epochs):
        order = rng.permutation(n)
        total = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            pred, cache = forward_batch(params, X[idx], "train", rng)
            total += float(np.sum(huber_loss(pred, y[idx], delta)))
            grads = backward(params, cache, y[idx])
            params, state = adam_step(params, grads, state, config)
        history.train_loss.append(total / n)
        if val_ds is not None:
            vp = predict_scaled(params, val_ds.inputs)
            history.val_loss.append(float(np.mean(huber_loss(vp, val_ds.targets, delta))))
            history.val_mae.append(float(np.mean(np.abs(vp - val_ds.targets))))
        else:
            history.val_loss.append(math.nan)
            history.val_mae.append(math.nan)
        logger.debug("epoch %d/%d train=%.6g val=%.6g", epoch + 1, config.epochs,
                     history.train_loss[-1], history.val_loss[-1])
        if on_epoch is not None:
            on_epoch(epoch, history)
    return params, history


def _check_compat(params: ModelParams, dataset: WindowedDataset, scaler: Optional[ScalerParams]) -> None:
    cfg = params.config
    if len(dataset.feature_names) != cfg.feature_count or dataset.lookback != cfg.lookback:
        raise ScalerMismatch(
            f"dataset features {dataset.feature_names} / lookback {dataset.lookback} "
            f"incompatible with model ({cfg.feature_count} features, lookback {cfg.lookback})"
        )
    if scaler is not None and scaler != dataset.scaler:
        raise ScalerMismatch(f"dataset scaler {dataset.scaler} differs from model scaler {scaler}")


def predict_series(
    params: ModelParams,
    dataset: WindowedDataset,
    scaler: Optional[ScalerParams] = None,
) -> list[tuple[date, float]]:
    """One-step-ahead close predictions in currency units, keyed by target date."""
    _check_compat(params, dataset, scaler)
    raw = predict_scaled(params, dataset.inputs)
    prices = inverse_scale(raw, dataset.scaler, feature=TARGET)
    return [(d, float(p)) for d, p in zip(dataset.target_dates, prices)]


def predict_next(params: ModelParams, series: PriceSeries, scaler: ScalerParams) -> float:
    """Forecast the close ``horizon`` days after the last bar of ``series``."""
    lookback = params.config.lookback
    if len(series) < lookback:
        raise InsufficientData(f"{series.ticker}: need {lookback} bars, have {len(series)}")
    if len(scaler.features) != params.config.feature_count:
        raise ScalerMismatch("scaler feature count differs from model")
    cols = np.column_stack([series.column(f) for f in scaler.features])[-lookback:]
    window = scale(cols, scaler)
    raw = predict_scaled(params, window[None])
    return float(inverse_scale(raw, scaler, feature=TARGET)[0])


FIXED_KEYS = ("lookback", "feature_count")


def grid_search(
    grid: dict[str, Sequence[Any]],
    dataset: WindowedDataset,
    base: ModelConfig,
    max_combinations: int = 64,
    validation_fraction: float = 0.1,
) -> tuple[ModelConfig, list[tuple[ModelConfig, float]]]:
    """Train one model per grid point and keep the lowest final validation loss.

    Every candidate shares ``base.seed``. Ties go to the earlier grid point.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        raise ValueError("grid must name at least one hyperparameter with candidates")
    for key in grid:
        if key in FIXED_KEYS:
            raise ValueError(f"{key} is fixed by the dataset and cannot be searched")
        if key not in base.to_dict():
            raise ValueError(f"unknown hyperparameter {key!r}")
    size = math.prod(len(v) for v in grid.values())
    if size > max_combinations:
        raise GridTooLarge(f"grid has {size} combinations, cap is {max_combinations}")

    keys = list(grid)
    table: list[tuple[ModelConfig, float]] = []
    best: Optional[tuple[ModelConfig, float]] = None
    for values in itertools.product(*(grid[k] for k in keys)):
        cfg = replace(base, **dict(zip(keys, values)))
        _, history = train(dataset, cfg, validation_fraction)
        score = history.val_loss[-1]
        if math.isnan(score):
            score = math.inf
        table.append((cfg, score))
        logger.info("grid point %s -> val_loss %.6g", dict(zip(keys, values)), score)
        if best is None or score < best[1]:
            best = (cfg, score)
    assert best is not None
    return best[0], table
