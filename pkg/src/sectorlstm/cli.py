"""Command-line entry point.

    sectorlstm fetch        --config run.yaml --out data/
    sectorlstm train        --config run.yaml --data data/ --out models/ [TICKER]
    sectorlstm predict      --config run.yaml --data data/ --models models/ --out results/ [TICKER]
    sectorlstm backtest     --config run.yaml --data data/ --models models/ --out results/ [TICKER]
    sectorlstm sector-report --config run.yaml --results results/ --out report/
    sectorlstm gridsearch   --config run.yaml --data data/ --out grid/ --max-combinations 8 TICKER

Per-ticker commands run every configured ticker when TICKER is omitted;
``--jobs N`` spreads those over N worker processes. Exit status is 0 on
success and 2 when a pipeline error fires; the error class name is printed
on stderr.
"""

from __future__ import annotations

import argparse
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from functools import partial
from pathlib import Path
from typing import Callable, Optional, Sequence

from . import __version__, pipeline
from .config import EVAL_RANGES, RunConfig, load_config
from .errors import ConfigInvalid, PipelineError

log = logging.getLogger("sectorlstm")


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", required=True, type=Path, help="YAML run configuration")
    p.add_argument("--out", required=True, type=Path, help="output directory")
    p.add_argument("--seed", type=int, default=None, help="override the model seed")
    p.add_argument("--jobs", type=int, default=1, help="worker processes for per-ticker stages")
    p.add_argument("--eval-range", choices=EVAL_RANGES, default=None,
                   help="backtest over the full period or the test split only")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sectorlstm", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="count", default=0)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fetch", help="download price history for every configured ticker")
    _common(p)
    p.add_argument("--mock-dir", type=Path, default=None,
                   help=f"serve CSVs from this directory (also ${pipeline.MOCK_FEED_ENV})")

    for name, help_ in (("train", "train one model per ticker"),
                        ("predict", "write next-day predictions"),
                        ("backtest", "run the daily buy/sell backtest")):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.add_argument("ticker", nargs="?", help="symbol or short code (default: all)")
        p.add_argument("--data", required=True, type=Path, help="directory of <symbol>.csv files")
        if name != "train":
            p.add_argument("--models", type=Path, default=None, help="directory of model_<symbol>.ckpt")
            p.add_argument("--checkpoint", type=Path, default=None, help="explicit checkpoint (single ticker)")

    p = sub.add_parser("sector-report", help="aggregate per-stock results into sector tables")
    _common(p)
    p.add_argument("--results", required=True, type=Path, help="directory of result_<symbol>.csv")
    p.add_argument("--run-id", default=None, help="report file stamp (default: digest of inputs)")

    p = sub.add_parser("gridsearch", help="hyperparameter grid search for one ticker")
    _common(p)
    p.add_argument("ticker")
    p.add_argument("--data", required=True, type=Path)
    p.add_argument("--max-combinations", required=True, type=int,
                   help="refuse grids larger than this many combinations")
    return parser


def _checkpoint_for(args, symbol: str) -> Path:
    if args.checkpoint is not None:
        return args.checkpoint
    if args.models is None:
        raise ConfigInvalid("pass --models or --checkpoint")
    return args.models / f"model_{symbol}.ckpt"


def _per_ticker(config: RunConfig, args, job: Callable[[str], object]) -> None:
    if args.ticker:
        job(config.ticker(args.ticker).symbol)
        return
    symbols = [t.symbol for t in config.universe.tickers()]
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            list(pool.map(job, symbols))
    else:
        for s in symbols:
            job(s)


def _train_one(config, args, symbol):
    m = pipeline.cmd_train(config, symbol, args.data, args.out)
    log.info("train %s: val_mae=%.6g", symbol, m.extra["final_val_mae"])


def _predict_one(config, args, symbol):
    pipeline.cmd_predict(config, symbol, _checkpoint_for(args, symbol), args.data, args.out, args.eval_range)
    log.info("predict %s done", symbol)


def _backtest_one(config, args, symbol):
    m = pipeline.cmd_backtest(config, symbol, _checkpoint_for(args, symbol), args.data, args.out, args.eval_range)
    log.info("backtest %s: total=%.2f ratio=%d accuracy=%.4f", symbol, m.extra["profit"]["total_profit"],
             m.extra["profit"]["ratio_display"], m.extra["eval"]["accuracy_score"])


def run(args: argparse.Namespace) -> None:
    config = load_config(args.config).with_seed(args.seed)
    if args.command == "fetch":
        m = pipeline.cmd_fetch(config, args.out, args.mock_dir)
        log.info("fetched %d file(s)", len(m.outputs))
    elif args.command == "train":
        _per_ticker(config, args, partial(_train_one, config, args))
    elif args.command == "predict":
        _per_ticker(config, args, partial(_predict_one, config, args))
    elif args.command == "backtest":
        _per_ticker(config, args, partial(_backtest_one, config, args))
    elif args.command == "sector-report":
        m = pipeline.cmd_sector_report(config, args.results, args.out, args.run_id)
        log.info("ranking: %s", ", ".join(m.extra["ranking"]))
    elif args.command == "gridsearch":
        m = pipeline.cmd_gridsearch(config, args.ticker, args.data, args.out, args.max_combinations)
        log.info("best: %s", m.extra["best"])


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose > 1 else logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        run(args)
    except PipelineError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
