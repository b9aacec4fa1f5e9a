"""YAML run configuration: universe, dates, model settings and search grid.

Example::

    start_date: 2010-01-01
    end_date: 2021-08-26
    split_date: 2021-01-01
    features: [close]
    feed:
      directory: raw/            # relative to this file
    model:
      lstm_units: 256
      epochs: 100
    sectors:
      - name: Energy
        tickers:
          - {symbol: RELIANCE.NS, short_code: RIL, weight: 33.75}
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from datetime import date
from pathlib import Path
from typing import Any, Optional

import yaml

from .dataset import ALL_FEATURES, DEFAULT_FEATURES, TARGET
from .engine.model import ModelConfig
from .errors import ConfigInvalid
from .market_data import SectorSpec, TickerSpec, UniverseConfig

EVAL_RANGES = ("full", "test")


@dataclass(frozen=True)
class RunConfig:
    universe: UniverseConfig
    model: ModelConfig = field(default_factory=ModelConfig)
    features: tuple[str, ...] = DEFAULT_FEATURES
    validation_fraction: float = 0.1
    eval_range: str = "full"
    feed_directory: Optional[Path] = None
    feed_endpoint: Optional[str] = None
    grid: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict, compare=False)

    def ticker(self, key: str) -> TickerSpec:
        """Look a ticker up by symbol or short code."""
        for t in self.universe.tickers():
            if key in (t.symbol, t.short_code):
                return t
        raise ConfigInvalid(f"ticker {key!r} is not in the configured universe")

    def with_seed(self, seed: Optional[int]) -> "RunConfig":
        if seed is None:
            return self
        return replace(self, model=replace(self.model, seed=seed))

    def echo(self) -> dict:
        """Resolved settings as plain data, for manifests and reports."""
        u = self.universe
        return {
            "start_date": u.start_date.isoformat(),
            "end_date": u.end_date.isoformat(),
            "split_date": u.split_date.isoformat(),
            "features": list(self.features),
            "validation_fraction": self.validation_fraction,
            "eval_range": self.eval_range,
            "model": self.model.to_dict(),
            "sectors": [
                {"name": s.name,
                 "tickers": [{"symbol": t.symbol, "short_code": t.short_code, "weight": t.index_weight}
                             for t in s.tickers]}
                for s in u.sectors
            ],
        }


def _as_date(value: Any, key: str) -> date:
    if isinstance(value, date):
        return value
    try:
        return date.fromisoformat(str(value))
    except ValueError:
        raise ConfigInvalid(f"{key}: not an ISO date: {value!r}") from None


def parse_config(data: Any, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigInvalid("configuration must be a mapping")
    base_dir = base_dir or Path.cwd()
    try:
        sectors = []
        for s in data.get("sectors") or []:
            tickers = [
                TickerSpec(str(t["symbol"]), str(t.get("short_code") or t["symbol"]),
                           None if t.get("weight") is None else float(t["weight"]))
                for t in s["tickers"]
            ]
            sectors.append(SectorSpec(str(s["name"]), tuple(tickers)))
        if not sectors:
            raise ConfigInvalid("at least one sector is required")
        universe = UniverseConfig(
            tuple(sectors),
            _as_date(data.get("start_date", "2010-01-01"), "start_date"),
            _as_date(data.get("end_date", "2021-08-26"), "end_date"),
            _as_date(data.get("split_date", "2021-01-01"), "split_date"),
        )
        features = tuple(data.get("features") or DEFAULT_FEATURES)
        unknown = set(features) - set(ALL_FEATURES)
        if unknown or TARGET not in features:
            raise ConfigInvalid(f"features must be drawn from {ALL_FEATURES} and include {TARGET!r}")
        model_dict = dict(data.get("model") or {})
        model_dict["feature_count"] = len(features)
        if "seed" in data and "seed" not in model_dict:
            model_dict["seed"] = int(data["seed"])
        model = ModelConfig.from_dict(model_dict)
        validation_fraction = float(data.get("validation_fraction", 0.1))
        if not 0.0 <= validation_fraction <= 0.5:
            raise ConfigInvalid(f"validation_fraction must be in [0, 0.5], got {validation_fraction}")
        eval_range = str(data.get("eval_range", "full"))
        if eval_range not in EVAL_RANGES:
            raise ConfigInvalid(f"eval_range must be one of {EVAL_RANGES}")
        feed = data.get("feed") or {}
        directory = feed.get("directory")
        grid = data.get("grid") or {}
        if not isinstance(grid, dict) or not all(isinstance(v, list) for v in grid.values()):
            raise ConfigInvalid("grid must map hyperparameter names to lists of candidates")
        return RunConfig(
            universe=universe,
            model=model,
            features=features,
            validation_fraction=validation_fraction,
            eval_range=eval_range,
            feed_directory=(base_dir / directory) if directory else None,
            feed_endpoint=feed.get("endpoint"),
            grid=grid,
            raw=data,
        )
    except ConfigInvalid:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigInvalid(f"invalid configuration: {exc}") from exc


def load_config(path: str | Path) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config {path}: {exc}") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigInvalid(f"{path}: {exc}") from exc
    return parse_config(data, path.parent)
