"""Sector aggregation, ranking, table rendering and plot-data files."""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from . import __version__
from .backtest import ProfitSummary, round_half_away
from .engine.training import TrainHistory
from .errors import DuplicateSector, EmptySector, IoFailure
from .market_data import TickerSpec
from .metrics import EvalReport

PROFIT_COLUMNS = ("Stock", "Profit in Buying", "Profit in Selling", "Total Profit",
                  "Mean Price", "Total Profit / Mean Price")
METRIC_COLUMNS = ("Stock", "Huber Loss", "Mean Abs. Err.", "Acc. Score")
PROFIT_FOOTER = "Avg. profit/mean price of the sector"


@dataclass(frozen=True)
class StockResult:
    ticker_spec: TickerSpec
    profit: ProfitSummary
    eval: EvalReport

    def __post_init__(self):
        sym = self.ticker_spec.symbol
        if self.profit.ticker != sym or self.eval.ticker != sym:
            raise ValueError(
                f"ticker mismatch: spec {sym}, profit {self.profit.ticker}, eval {self.eval.ticker}"
            )


@dataclass(frozen=True)
class SectorResult:
    name: str
    stock_results: tuple[StockResult, ...]
    avg_ratio: float
    avg_ratio_display: int
    avg_huber: float
    avg_mae: float
    avg_accuracy: float


@dataclass(frozen=True)
class ReportDoc:
    config: dict
    sectors: tuple[SectorResult, ...]
    ranking: tuple[str, ...]
    generated_at: str = ""
    engine_version: str = __version__


def aggregate_sector(name: str, rows: Sequence[StockResult]) -> SectorResult:
    """Average the unrounded per-stock ratios and metrics; round for display last."""
    rows = tuple(rows)
    if not rows:
        raise EmptySector(f"sector {name!r} has no stock results")
    avg_ratio = float(np.mean([r.profit.ratio for r in rows]))
    return SectorResult(
        name=name,
        stock_results=rows,
        avg_ratio=avg_ratio,
        avg_ratio_display=round_half_away(avg_ratio),
        avg_huber=float(np.mean([r.eval.huber_loss for r in rows])),
        avg_mae=float(np.mean([r.eval.mae for r in rows])),
        avg_accuracy=float(np.mean([r.eval.accuracy_score for r in rows])),
    )


def rank_sectors(results: Sequence[SectorResult]) -> list[SectorResult]:
    """Most profitable first; equal averages fall back to alphabetical order."""
    if not results:
        raise EmptySector("nothing to rank")
    names = [r.name for r in results]
    if len(set(names)) != len(names):
        raise DuplicateSector(f"duplicate sector names: {names}")
    return sorted(results, key=lambda r: (-r.avg_ratio, r.name))


def build_report(config: dict, results: Sequence[SectorResult], generated_at: str = "") -> ReportDoc:
    ranked = rank_sectors(results)
    return ReportDoc(config, tuple(results), tuple(r.name for r in ranked), generated_at)


def _int(x: float) -> str:
    return str(round_half_away(x))


def _f6(x: float) -> str:
    return f"{x:.6f}"


def _profit_rows(sector: SectorResult) -> list[list[str]]:
    return [
        [r.ticker_spec.short_code, _int(r.profit.buy_profit), _int(r.profit.sell_profit),
         _int(r.profit.total_profit), _int(r.profit.mean_price), str(r.profit.ratio_display)]
        for r in sector.stock_results
    ]


def _metric_rows(sector: SectorResult) -> list[list[str]]:
    rows = [[r.ticker_spec.short_code, _f6(r.eval.huber_loss), _f6(r.eval.mae), _f6(r.eval.accuracy_score)]
            for r in sector.stock_results]
    rows.append(["Average", _f6(sector.avg_huber), _f6(sector.avg_mae), _f6(sector.avg_accuracy)])
    return rows


def _md_table(header: Sequence[str], rows: Iterable[Sequence[str]]) -> list[str]:
    lines = ["| " + " | ".join(header) + " |", "|" + "---|" * len(header)]
    lines += ["| " + " | ".join(r) + " |" for r in rows]
    return lines


def _by_name(doc: ReportDoc) -> dict[str, SectorResult]:
    return {s.name: s for s in doc.sectors}


def render_markdown(doc: ReportDoc) -> str:
    sectors = _by_name(doc)
    lines = ["# Sector profitability report", "", f"Engine version: {doc.engine_version}", ""]
    lines += ["## Ranking", ""]
    lines += _md_table(
        ("Rank", "Sector", "Avg. profit/mean price"),
        ([str(k), name, str(sectors[name].avg_ratio_display)] for k, name in enumerate(doc.ranking, 1)),
    )
    for sector in doc.sectors:
        lines += ["", f"## {sector.name}", "", "### Profitability", ""]
        footer = [PROFIT_FOOTER] + [""] * 4 + [str(sector.avg_ratio_display)]
        lines += _md_table(PROFIT_COLUMNS, _profit_rows(sector) + [footer])
        lines += ["", "### LSTM performance", ""]
        lines += _md_table(METRIC_COLUMNS, _metric_rows(sector))
    lines += ["", "## Configuration", "", "```json",
              json.dumps(doc.config, sort_keys=True, indent=2, default=str), "```", ""]
    return "\n".join(lines)


def render_csv(doc: ReportDoc) -> str:
    """Blank-line separated CSV blocks: ranking, then profit and metrics tables per sector."""
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    sectors = _by_name(doc)
    w.writerow(["rank", "sector", "avg_profit_over_mean_price"])
    for k, name in enumerate(doc.ranking, 1):
        w.writerow([k, name, sectors[name].avg_ratio_display])
    for sector in doc.sectors:
        out.write("\n")
        w.writerow(["sector", *PROFIT_COLUMNS])
        for row in _profit_rows(sector):
            w.writerow([sector.name, *row])
        w.writerow([sector.name, PROFIT_FOOTER, "", "", "", "", sector.avg_ratio_display])
        out.write("\n")
        w.writerow(["sector", *METRIC_COLUMNS])
        for row in _metric_rows(sector):
            w.writerow([sector.name, *row])
    return out.getvalue()


def render_tables(doc: ReportDoc, format: str = "markdown") -> str:
    if format == "markdown":
        return render_markdown(doc)
    if format == "csv":
        return render_csv(doc)
    raise ValueError(f"unknown format {format!r}")


RESULT_FIELDS = ("ticker", "short_code", "buy_profit", "sell_profit", "total_profit", "mean_price",
                 "ratio", "ratio_display", "huber_loss", "mae", "accuracy_score", "n_samples")


def stock_result_csv(result: StockResult) -> str:
    p, e = result.profit, result.eval
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow(RESULT_FIELDS)
    w.writerow([p.ticker, result.ticker_spec.short_code, repr(p.buy_profit), repr(p.sell_profit),
                repr(p.total_profit), repr(p.mean_price), repr(p.ratio), p.ratio_display,
                repr(e.huber_loss), repr(e.mae), repr(e.accuracy_score), e.n_samples])
    return out.getvalue()


def parse_stock_result(text: str, spec: TickerSpec) -> StockResult:
    rows = list(csv.DictReader(io.StringIO(text)))
    if len(rows) != 1:
        raise ValueError(f"expected one result row, got {len(rows)}")
    r = rows[0]
    f = {k: float(r[k]) for k in RESULT_FIELDS[2:] if k not in ("ratio_display", "n_samples")}
    profit = ProfitSummary(r["ticker"], f["buy_profit"], f["sell_profit"], f["total_profit"],
                           f["mean_price"], f["ratio"], int(r["ratio_display"]))
    ev = EvalReport(r["ticker"], f["huber_loss"], f["mae"], f["accuracy_score"], int(r["n_samples"]))
    return StockResult(spec, profit, ev)


def _write(path: Path, text: str) -> Path:
    try:
        path.write_text(text, encoding="utf-8")
    except OSError as exc:
        raise IoFailure(f"cannot write {path}: {exc}") from exc
    return path


def emit_plot_data(
    history: TrainHistory | None,
    predictions: Sequence[tuple[date, float, float]],
    out_dir: str | Path,
    ticker: str,
) -> list[Path]:
    """Write ``loss_<ticker>.csv`` (when a history is given) and ``pred_<ticker>.csv``."""
    out_dir = Path(out_dir)
    try:
        out_dir.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise IoFailure(f"cannot create {out_dir}: {exc}") from exc
    written = []
    if history is not None:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss"])
        for k, (tl, vl) in enumerate(zip(history.train_loss, history.val_loss), 1):
            w.writerow([k, repr(float(tl)), repr(float(vl))])
        written.append(_write(out_dir / f"loss_{ticker}.csv", buf.getvalue()))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["date", "actual", "predicted"])
    for d, a, p in predictions:
        w.writerow([d.isoformat(), repr(float(a)), repr(float(p))])
    written.append(_write(out_dir / f"pred_{ticker}.csv", buf.getvalue()))
    return written
