"""File-staged pipeline commands: fetch -> train -> predict/backtest -> sector report.

Each ``cmd_*`` function reads its inputs from disk, writes its outputs to an
output directory and returns a :class:`RunManifest`. Identical inputs and
seed give byte-identical outputs; wall-clock data lives only in the
manifest.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import time
from dataclasses import asdict, dataclass, field
from datetime import date, datetime, timezone
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .backtest import ledger_csv, run_backtest, signals_from_predictions
from .config import RunConfig
from .dataset import TARGET, SplitSpec, chronological_split, fit_scaler, make_windows, scale
from .engine import (
    ModelConfig,
    grid_search,
    load_checkpoint,
    predict_next,
    predict_series,
    save_checkpoint,
    train,
)
from .engine.training import predict_scaled
from .errors import ConfigInvalid, IoFailure, MissingStockResult, ScalerMismatch
from .market_data import (
    DataFeedClient,
    FileFeedClient,
    HttpFeedClient,
    PriceSeries,
    TickerSpec,
    fetch_daily,
    load_csv,
    serialize_bars,
    slice_range,
)
from .metrics import evaluate
from .report import (
    StockResult,
    aggregate_sector,
    build_report,
    emit_plot_data,
    parse_stock_result,
    render_tables,
    stock_result_csv,
)

logger = logging.getLogger(__name__)

MOCK_FEED_ENV = "SECTORLSTM_MOCK_FEED"


@dataclass
class RunManifest:
    command: str
    config: dict
    seed: Optional[int]
    inputs: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    duration_s: float = 0.0
    started_at: str = ""
    extra: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True, default=str)


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


class _Run:
    """Collects inputs/outputs for one command and writes its manifest."""

    def __init__(self, command: str, config: RunConfig, out_dir: Path, tag: str = ""):
        self.manifest = RunManifest(command, config.echo(), config.model.seed,
                                    started_at=datetime.now(timezone.utc).isoformat(timespec="seconds"))
        self.out_dir = Path(out_dir)
        self.tag = tag
        self._t0 = time.perf_counter()
        try:
            self.out_dir.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise IoFailure(f"cannot create {self.out_dir}: {exc}") from exc

    def read(self, path: Path) -> Path:
        self.manifest.inputs[str(path)] = file_digest(path)
        return path

    def write_text(self, name: str, text: str) -> Path:
        path = self.out_dir / name
        try:
            path.write_text(text, encoding="utf-8")
        except OSError as exc:
            raise IoFailure(f"cannot write {path}: {exc}") from exc
        self.manifest.outputs.append(str(path))
        return path

    def wrote(self, paths: Sequence[Path]) -> None:
        self.manifest.outputs.extend(str(p) for p in paths)

    def finish(self) -> RunManifest:
        self.manifest.duration_s = round(time.perf_counter() - self._t0, 3)
        name = f"manifest_{self.manifest.command}{'_' + self.tag if self.tag else ''}.json"
        (self.out_dir / name).write_text(self.manifest.to_json(), encoding="utf-8")
        return self.manifest


def feed_client(config: RunConfig, mock_dir: str | Path | None = None) -> DataFeedClient:
    """Pick the feed: explicit mock dir, then the environment, then the config file."""
    mock_dir = mock_dir or os.environ.get(MOCK_FEED_ENV)
    if mock_dir:
        return FileFeedClient(mock_dir)
    if config.feed_directory is not None:
        return FileFeedClient(config.feed_directory)
    if config.feed_endpoint:
        return HttpFeedClient(config.feed_endpoint)
    raise ConfigInvalid(f"no data feed configured (set feed.directory, feed.endpoint or ${MOCK_FEED_ENV})")


def _load_series(config: RunConfig, spec: TickerSpec, data_dir: Path, run: _Run) -> PriceSeries:
    path = Path(data_dir) / f"{spec.symbol}.csv"
    if not path.exists():
        raise IoFailure(f"no price file for {spec.symbol}: {path}")
    series = load_csv(run.read(path), spec.symbol)
    u = config.universe
    return slice_range(series, u.start_date, u.end_date)


def cmd_fetch(config: RunConfig, out_dir: str | Path, mock_dir: str | Path | None = None) -> RunManifest:
    """Download (or copy from the mock feed) one CSV per configured ticker."""
    client = feed_client(config, mock_dir)
    run = _Run("fetch", config, Path(out_dir))
    u = config.universe
    dropped = {}
    for spec in u.tickers():
        series = fetch_daily(client, spec.symbol, u.start_date, u.end_date)
        dropped[spec.symbol] = series.dropped_rows
        run.write_text(f"{spec.symbol}.csv", serialize_bars(series))
    run.manifest.extra["dropped_rows"] = dropped
    return run.finish()


def cmd_train(config: RunConfig, ticker: str, data_dir: str | Path, out_dir: str | Path) -> RunManifest:
    """Fit the scaler and model on bars before the split date; write checkpoint and history."""
    spec = config.ticker(ticker)
    run = _Run("train", config, Path(out_dir), spec.symbol)
    series = _load_series(config, spec, Path(data_dir), run)
    train_series, _ = chronological_split(series, SplitSpec(config.universe.split_date, config.validation_fraction))
    scaler = fit_scaler(train_series, config.features)
    dataset = make_windows(train_series, scaler, config.model.lookback, 1, config.features)
    params, history = train(dataset, config.model, config.validation_fraction)

    ckpt = save_checkpoint(run.out_dir / f"model_{spec.symbol}.ckpt", params, scaler)
    run.wrote([ckpt])
    run.write_text(f"history_{spec.symbol}.csv", history.to_csv())
    run.wrote(emit_plot_data(history, [], run.out_dir, spec.symbol)[:1])
    run.manifest.extra.update(
        checkpoint_sha256=file_digest(ckpt),
        final_train_loss=history.train_loss[-1],
        final_val_loss=history.val_loss[-1],
        final_val_mae=history.val_mae[-1],
        train_windows=len(dataset),
    )
    return run.finish()


@dataclass
class _Predictions:
    dates: list[date]
    actual: np.ndarray
    predicted: np.ndarray
    predicted_scaled: np.ndarray
    actual_scaled: np.ndarray
    anchor: tuple[date, float]


def _predict_range(config: RunConfig, series: PriceSeries, ckpt: Path, eval_range: str):
    params, scaler = load_checkpoint(ckpt)
    if scaler.features != tuple(config.features):
        raise ScalerMismatch(f"checkpoint features {scaler.features} != configured {tuple(config.features)}")
    dataset = make_windows(series, scaler, params.config.lookback, 1, scaler.features)
    if eval_range == "test":
        keep = [i for i, d in enumerate(dataset.target_dates) if d >= config.universe.split_date]
        if not keep:
            raise ConfigInvalid("no predictions fall on or after the split date")
        dataset = dataset.subset(keep)
    preds = predict_series(params, dataset, scaler)
    bars = {b.date: b.close for b in series.bars}
    dates = list(dataset.target_dates)
    first = series.dates.index(dates[0])
    anchor = (series.bars[first - 1].date, series.bars[first - 1].close)
    actual = np.array([bars[d] for d in dates])
    return params, scaler, _Predictions(
        dates=dates,
        actual=actual,
        predicted=np.array([p for _, p in preds]),
        predicted_scaled=predict_scaled(params, dataset.inputs),
        actual_scaled=dataset.targets,
        anchor=anchor,
    )


def cmd_predict(config: RunConfig, ticker: str, checkpoint: str | Path, data_dir: str | Path,
                out_dir: str | Path, eval_range: Optional[str] = None) -> RunManifest:
    """Write one-day-ahead predictions over the evaluation range plus the next-day forecast."""
    spec = config.ticker(ticker)
    run = _Run("predict", config, Path(out_dir), spec.symbol)
    series = _load_series(config, spec, Path(data_dir), run)
    params, scaler, pr = _predict_range(config, series, run.read(Path(checkpoint)), eval_range or config.eval_range)
    rows = list(zip(pr.dates, pr.actual, pr.predicted))
    run.wrote(emit_plot_data(None, rows, run.out_dir, spec.symbol))
    nxt = predict_next(params, series, scaler)
    run.write_text(f"forecast_{spec.symbol}.csv",
                   f"last_date,horizon_days,predicted_close\n{series.last_date.isoformat()},1,{nxt!r}\n")
    return run.finish()


def cmd_backtest(config: RunConfig, ticker: str, checkpoint: str | Path, data_dir: str | Path,
                 out_dir: str | Path, eval_range: Optional[str] = None) -> RunManifest:
    """Predictions -> signals -> profits over the evaluation range; metrics over the test range."""
    spec = config.ticker(ticker)
    eval_range = eval_range or config.eval_range
    run = _Run("backtest", config, Path(out_dir), spec.symbol)
    series = _load_series(config, spec, Path(data_dir), run)
    ckpt = run.read(Path(checkpoint))
    params, scaler, pr = _predict_range(config, series, ckpt, eval_range)

    actual = [pr.anchor] + list(zip(pr.dates, pr.actual.tolist()))
    predicted = list(zip(pr.dates, pr.predicted.tolist()))
    signals = signals_from_predictions(actual, predicted)
    profit = run_backtest(actual, signals, spec.symbol)

    if eval_range == "test":
        tp = pr
    else:
        _, _, tp = _predict_range(config, series, ckpt, "test")
    test_actual = [tp.anchor] + list(zip(tp.dates, tp.actual.tolist()))
    ev = evaluate(spec.symbol, test_actual, list(zip(tp.dates, tp.predicted.tolist())),
                  tp.actual_scaled, tp.predicted_scaled, params.config.huber_delta)

    run.write_text(f"ledger_{spec.symbol}.csv", ledger_csv(actual, signals))
    run.wrote(emit_plot_data(None, list(zip(pr.dates, pr.actual, pr.predicted)), run.out_dir, spec.symbol))
    run.write_text(f"result_{spec.symbol}.csv", stock_result_csv(StockResult(spec, profit, ev)))
    run.manifest.extra.update(profit=asdict(profit), eval=ev.to_dict(), eval_range=eval_range)
    return run.finish()


def cmd_sector_report(config: RunConfig, results_dir: str | Path, out_dir: str | Path,
                      run_id: Optional[str] = None) -> RunManifest:
    """Aggregate ``result_<symbol>.csv`` rows per sector and write the ranked report."""
    run = _Run("sector-report", config, Path(out_dir))
    results_dir = Path(results_dir)
    digest = hashlib.sha256(json.dumps(config.echo(), sort_keys=True).encode())
    sectors = []
    for sector in config.universe.sectors:
        rows = []
        for spec in sector.tickers:
            path = results_dir / f"result_{spec.symbol}.csv"
            if not path.exists():
                raise MissingStockResult(f"no result row for ticker {spec.symbol} ({path})")
            run.read(path)
            text = path.read_text(encoding="utf-8")
            digest.update(text.encode())
            rows.append(parse_stock_result(text, spec))
        sectors.append(aggregate_sector(sector.name, rows))
    run_id = run_id or digest.hexdigest()[:12]
    doc = build_report(config.echo(), sectors, generated_at=run.manifest.started_at)
    run.write_text(f"report_{run_id}.md", render_tables(doc, "markdown"))
    run.write_text(f"report_{run_id}.csv", render_tables(doc, "csv"))
    run.manifest.extra.update(run_id=run_id, ranking=list(doc.ranking))
    return run.finish()


def cmd_gridsearch(config: RunConfig, ticker: str, data_dir: str | Path, out_dir: str | Path,
                   max_combinations: int) -> RunManifest:
    if not config.grid:
        raise ConfigInvalid("the config has no 'grid' section")
    spec = config.ticker(ticker)
    run = _Run("gridsearch", config, Path(out_dir), spec.symbol)
    series = _load_series(config, spec, Path(data_dir), run)
    train_series, _ = chronological_split(series, SplitSpec(config.universe.split_date, config.validation_fraction))
    scaler = fit_scaler(train_series, config.features)
    dataset = make_windows(train_series, scaler, config.model.lookback, 1, config.features)
    best, table = grid_search(config.grid, dataset, config.model, max_combinations, config.validation_fraction)
    keys = list(config.grid)
    lines = [",".join([*keys, "val_loss"])]
    for cfg, loss in table:
        d = cfg.to_dict()
        lines.append(",".join([*(str(d[k]) for k in keys), repr(loss)]))
    run.write_text(f"gridsearch_{spec.symbol}.csv", "\n".join(lines) + "\n")
    run.write_text(f"best_config_{spec.symbol}.json", json.dumps(best.to_dict(), indent=2, sort_keys=True) + "\n")
    run.manifest.extra["best"] = {k: best.to_dict()[k] for k in keys}
    return run.finish()
