"""Scaled sliding-window samples and the chronological train/test split."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import date
from typing import Sequence

import numpy as np

from .errors import (
    DegenerateRange,
    EmptyDataset,
    InsufficientData,
    ScalerMismatch,
    SplitOutOfRange,
)
from .market_data import PriceSeries

DEFAULT_FEATURES = ("close",)
ALL_FEATURES = ("open", "high", "low", "close", "volume")
TARGET = "close"


@dataclass(frozen=True)
class ScalerParams:
    """Per-feature min-max parameters, fitted on training data only."""

    features: tuple[str, ...]
    mins: tuple[float, ...]
    maxs: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "mins", tuple(float(v) for v in self.mins))
        object.__setattr__(self, "maxs", tuple(float(v) for v in self.maxs))
        if not (len(self.features) == len(self.mins) == len(self.maxs)):
            raise ValueError("scaler fields must have equal length")
        for name, lo, hi in zip(self.features, self.mins, self.maxs):
            if not hi > lo:
                raise DegenerateRange(f"feature {name!r}: max {hi} must exceed min {lo}")

    def index(self, feature: str) -> int:
        try:
            return self.features.index(feature)
        except ValueError:
            raise ScalerMismatch(f"scaler has no feature {feature!r}") from None

    def to_dict(self) -> dict:
        return {"features": list(self.features), "mins": list(self.mins), "maxs": list(self.maxs)}

    @classmethod
    def from_dict(cls, d: dict) -> "ScalerParams":
        return cls(tuple(d["features"]), tuple(d["mins"]), tuple(d["maxs"]))


@dataclass(frozen=True)
class SplitSpec:
    split_date: date = date(2021, 1, 1)
    validation_fraction: float = 0.1

    def __post_init__(self):
        if not 0 <= self.validation_fraction <= 0.5:
            raise ValueError("validation_fraction must lie in [0, 0.5]")


@dataclass(frozen=True, eq=False)
class WindowedDataset:
    """Supervised samples: ``inputs[i]`` predicts ``targets[i]`` on ``target_dates[i]``.

    ``inputs`` has shape (n, lookback, feature_count); ``window_end_dates``
    holds the date of the last bar of every window.
    """

    inputs: np.ndarray
    targets: np.ndarray
    target_dates: tuple[date, ...]
    window_end_dates: tuple[date, ...]
    lookback: int
    horizon: int
    feature_names: tuple[str, ...]
    scaler: ScalerParams

    def __post_init__(self):
        n = len(self.targets)
        if self.inputs.ndim != 3 or self.inputs.shape[0] != n:
            raise ValueError(f"inputs shape {self.inputs.shape} does not match {n} targets")
        if self.inputs.shape[1:] != (self.lookback, len(self.feature_names)):
            raise ValueError(f"window shape {self.inputs.shape[1:]} != ({self.lookback}, {len(self.feature_names)})")
        if len(self.target_dates) != n or len(self.window_end_dates) != n:
            raise ValueError("date lists must align with targets")

    def __len__(self) -> int:
        return len(self.targets)

    def subset(self, index: slice | Sequence[int] | np.ndarray) -> "WindowedDataset":
        idx = np.arange(len(self))[index]
        return WindowedDataset(
            inputs=self.inputs[idx],
            targets=self.targets[idx],
            target_dates=tuple(self.target_dates[i] for i in idx),
            window_end_dates=tuple(self.window_end_dates[i] for i in idx),
            lookback=self.lookback,
            horizon=self.horizon,
            feature_names=self.feature_names,
            scaler=self.scaler,
        )

    def to_csv(self) -> str:
        """Debug dump, one window per record: ``target_date,target,f0_t0,...``."""
        n_feat = len(self.feature_names)
        out = io.StringIO()
        writer = csv.writer(out, lineterminator="\n")
        cols = [f"f{j}_t{k}" for k in range(self.lookback) for j in range(n_feat)]
        writer.writerow(["target_date", "target", *cols])
        for d, y, x in zip(self.target_dates, self.targets, self.inputs):
            writer.writerow([d.isoformat(), repr(float(y)), *(repr(float(v)) for v in x.ravel())])
        return out.getvalue()


def chronological_split(series: PriceSeries, spec: SplitSpec, context: int = 0) -> tuple[PriceSeries, PriceSeries]:
    """Split at ``spec.split_date``: train is strictly before it, test on or after.

    With ``context > 0`` the test series is prefixed by the last ``context``
    training bars, so that the first test day can be windowed.
    """
    train = tuple(b for b in series.bars if b.date < spec.split_date)
    test = tuple(b for b in series.bars if b.date >= spec.split_date)
    if not train or not test:
        raise SplitOutOfRange(
            f"{series.ticker}: split {spec.split_date} outside ({series.first_date}, {series.last_date}]"
        )
    if context > 0:
        test = train[-context:] + test
    return PriceSeries(series.ticker, train), PriceSeries(series.ticker, test)


def feature_matrix(series: PriceSeries, features: Sequence[str]) -> np.ndarray:
    return np.column_stack([series.column(f) for f in features])


def fit_scaler(train: PriceSeries, features: Sequence[str] = DEFAULT_FEATURES) -> ScalerParams:
    features = tuple(features)
    if TARGET not in features:
        raise ValueError(f"feature list must include {TARGET!r}: {features}")
    data = feature_matrix(train, features)
    return ScalerParams(features, data.min(axis=0), data.max(axis=0))


def _bounds(scaler: ScalerParams, x: np.ndarray, feature: str | None):
    if feature is not None:
        i = scaler.index(feature)
        return scaler.mins[i], scaler.maxs[i]
    lo = np.asarray(scaler.mins)
    hi = np.asarray(scaler.maxs)
    if len(scaler.features) == 1:
        return lo[0], hi[0]
    if x.shape[-1:] != lo.shape:
        raise ScalerMismatch(f"trailing dimension {x.shape[-1:]} != {len(lo)} features")
    return lo, hi


def scale(x, scaler: ScalerParams, feature: str | None = None) -> np.ndarray:
    """Map values to ``(v - min) / (max - min)``. Out-of-range values are not clamped."""
    x = np.asarray(x, dtype=np.float64)
    lo, hi = _bounds(scaler, x, feature)
    return (x - lo) / (hi - lo)


def inverse_scale(y, scaler: ScalerParams, feature: str | None = None) -> np.ndarray:
    y = np.asarray(y, dtype=np.float64)
    lo, hi = _bounds(scaler, y, feature)
    return y * (hi - lo) + lo


def make_windows(
    series: PriceSeries,
    scaler: ScalerParams,
    lookback: int = 50,
    horizon: int = 1,
    features: Sequence[str] | None = None,
) -> WindowedDataset:
    """Window ``i`` covers bars ``[i, i + lookback)``; its target is bar ``i + lookback + horizon - 1``."""
    features = tuple(features) if features is not None else scaler.features
    if features != scaler.features:
        raise ScalerMismatch(f"features {features} != scaler features {scaler.features}")
    if lookback < 1 or horizon < 1:
        raise ValueError("lookback and horizon must be >= 1")
    n = len(series)
    count = n - lookback - horizon + 1
    if count < 1:
        raise InsufficientData(
            f"{series.ticker}: {n} bars cannot fill lookback {lookback} + horizon {horizon}"
        )
    data = scale(feature_matrix(series, features), scaler)
    closes = scale(series.closes(), scaler, feature=TARGET)
    windows = np.lib.stride_tricks.sliding_window_view(data, (lookback, len(features)))[:, 0]
    inputs = np.ascontiguousarray(windows[:count])
    first = lookback + horizon - 1
    dates = series.dates
    return WindowedDataset(
        inputs=inputs,
        targets=closes[first:first + count].copy(),
        target_dates=tuple(dates[first:first + count]),
        window_end_dates=tuple(dates[lookback - 1:lookback - 1 + count]),
        lookback=lookback,
        horizon=horizon,
        feature_names=features,
        scaler=scaler,
    )


def validation_count(n: int, fraction: float) -> int:
    if fraction <= 0 or n < 2:
        return 0
    return min(n - 1, max(1, int(math.floor(n * fraction + 0.5))))


def split_validation(dataset: WindowedDataset, fraction: float = 0.1) -> tuple[WindowedDataset, WindowedDataset | None]:
    """Hold out the final ``fraction`` of windows, in chronological order."""
    n = len(dataset)
    if n == 0:
        raise EmptyDataset("no windows to split")
    n_val = validation_count(n, fraction)
    if n_val == 0:
        return dataset, None
    return dataset.subset(slice(0, n - n_val)), dataset.subset(slice(n - n_val, n))
