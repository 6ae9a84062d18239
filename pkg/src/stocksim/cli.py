"""Command line entry point: ``stocksim {similar,backtest,report,synth}``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
import time
from dataclasses import replace
from importlib import resources
from pathlib import Path

from stocksim.backtest import aggregate, load_grid, read_report, run_grid, write_report
from stocksim.errors import StockSimError
from stocksim.market_data import parse_bars_csv, write_bars_csv
from stocksim.similarity.align import FIXERS
from stocksim.similarity.rank import FUNCTIONS, VALUE_FIELDS, SimilarityConfig, rank_top_k

log = logging.getLogger("stocksim")


def bundled(name: str) -> Path:
    """Path of a file shipped in ``stocksim/data``."""
    return Path(str(resources.files("stocksim") / "data" / name))


def _data_path(arg):
    return Path(arg) if arg else bundled("demo_bars.csv")


def cmd_similar(args) -> int:
    universe = parse_bars_csv(_data_path(args.data), targets=[args.target])
    target = universe[args.target]
    start = args.start or target.dates[0]
    end = args.end or target.dates[-1]
    config = SimilarityConfig(args.function, args.value, args.fixer, args.k,
                              args.delay, args.pip_fraction)
    ranked = rank_top_k(args.target, universe, config, (start, end))
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["symbol", "distance", "rank"])
    for i, (sym, d) in enumerate(ranked.peers, 1):
        out.writerow([sym, repr(d), i])
    if ranked.shortfall:
        log.warning("only %d of %d requested peers could be scored", len(ranked), args.k)
    for sym, why in sorted(ranked.skipped.items()):
        log.info("skipped %s: %s", sym, why)
    return 0


def cmd_backtest(args) -> int:
    grid = load_grid(args.config or bundled("experiment2.cfg"))
    if args.seed is not None:
        grid = replace(grid, seed=args.seed)
    if args.stocks:
        grid = replace(grid, stocks=tuple(args.stocks.split(",")))
    universe = parse_bars_csv(_data_path(args.data), targets=grid.stocks)
    started = time.monotonic()

    def progress(done, total):
        log.info("%d/%d stock-folds done (%.0fs)", done, total, time.monotonic() - started)

    rows = run_grid(universe, grid, jobs=args.jobs, progress=progress)
    write_report(rows, args.out)
    failed = sum(1 for r in rows if not r.ok)
    print(f"{len(rows)} rows written to {args.out} ({failed} failed runs)")
    return 0


def cmd_report(args) -> int:
    df = read_report(args.input)
    group_by = [c.strip() for c in args.group_by.split(",") if c.strip()]
    agg = aggregate(df, group_by)
    agg.to_csv(args.out if args.out else sys.stdout, index=False, lineterminator="\n")
    if args.figures:
        from stocksim.plotting import metric_bars, profit_heatmap

        paths = metric_bars(agg, group_by, args.figures)
        if len(group_by) >= 2:
            paths.append(profit_heatmap(df, group_by[0], group_by[1],
                                        Path(args.figures) / "profit_heatmap.png"))
        for p in paths:
            log.info("wrote %s", p)
    return 0


def cmd_synth(args) -> int:
    from stocksim.synthetic import MarketParams, demo_market, sector_universe

    if args.demo:
        market = demo_market() if args.seed is None else demo_market(args.seed)
    else:
        params = MarketParams(length=args.length, gaps=args.gaps)
        market = sector_universe(args.stocks, args.sectors, params, args.seed or 0)
    write_bars_csv(market.universe, args.out)
    if args.sectors_out:
        with open(args.sectors_out, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["symbol", "sector"])
            w.writerows(sorted(market.sectors.items()))
    print(f"{len(market.universe)} symbols written to {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="stocksim", description=__doc__)
    p.add_argument("-v", "--verbose", action="count", default=0)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("similar", help="rank the stocks most similar to a target")
    s.add_argument("--data", help="bars CSV (default: bundled demo data)")
    s.add_argument("--target", required=True)
    s.add_argument("--function", choices=FUNCTIONS, default="cointegration")
    s.add_argument("--value", choices=VALUE_FIELDS, default="proc")
    s.add_argument("--fixer", choices=FIXERS, default="time_join")
    s.add_argument("--k", type=int, default=10)
    s.add_argument("--delay", type=int, default=1)
    s.add_argument("--pip-fraction", type=float, default=0.1)
    s.add_argument("--start", help="first date looked at (default: first bar)")
    s.add_argument("--end", help="last date looked at (default: last bar)")
    s.set_defaults(func=cmd_similar)

    b = sub.add_parser("backtest", help="run an experiment grid and write the results CSV")
    b.add_argument("--data", help="bars CSV (default: bundled demo data)")
    b.add_argument("--config", help="grid config file (default: bundled experiment2.cfg)")
    b.add_argument("--out", required=True)
    b.add_argument("--seed", type=int, help="overrides the config seed")
    b.add_argument("--stocks", help="comma-separated targets, overrides the config")
    b.add_argument("--jobs", type=int, default=1)
    b.set_defaults(func=cmd_backtest)

    r = sub.add_parser("report", help="mean metrics of a results CSV per group")
    r.add_argument("--in", dest="input", required=True)
    r.add_argument("--group-by", required=True, help="comma-separated column names")
    r.add_argument("--out", help="write the table here instead of stdout")
    r.add_argument("--figures", help="directory for PNG charts of the grouped means")
    r.set_defaults(func=cmd_report)

    y = sub.add_parser("synth", help="write a seeded synthetic sector market")
    y.add_argument("--out", required=True)
    y.add_argument("--stocks", type=int, default=30)
    y.add_argument("--sectors", type=int, default=3)
    y.add_argument("--length", type=int, default=1250)
    y.add_argument("--gaps", type=int, default=0)
    y.add_argument("--seed", type=int)
    y.add_argument("--demo", action="store_true", help="the bundled 7-symbol dataset")
    y.add_argument("--sectors-out", help="also write symbol,sector CSV here")
    y.set_defaults(func=cmd_synth)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    level = logging.WARNING - 10 * min(args.verbose, 2)
    logging.basicConfig(level=level, format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (StockSimError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
