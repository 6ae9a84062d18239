"""Daily OHLCV ingestion, validation and walk-forward fold partitioning."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from datetime import date
from pathlib import Path
from typing import Iterator, Mapping, Sequence

import numpy as np
import pandas as pd

from stocksim.errors import DataError, InsufficientDataError

logger = logging.getLogger(__name__)

COLUMNS = ("date", "open", "high", "low", "close", "volume", "symbol")
DEFAULT_SCHEMA = {c: c for c in COLUMNS}


@dataclass(frozen=True)
class Bar:
    date: date
    open: float
    high: float
    low: float
    close: float
    volume: float

    def is_valid(self) -> bool:
        return (
            self.open > 0
            and self.close > 0
            and self.volume >= 0
            and self.high >= max(self.open, self.close)
            and self.low <= min(self.open, self.close)
        )


def _frozen(a, dtype) -> np.ndarray:
    out = np.array(a, dtype=dtype)
    out.setflags(write=False)
    return out


@dataclass(frozen=True, eq=False)
class StockSeries:
    """A symbol's daily history, stored column-wise.

    Arrays are read-only; slicing returns new series objects.
    """

    symbol: str
    dates: np.ndarray
    open: np.ndarray
    high: np.ndarray
    low: np.ndarray
    close: np.ndarray
    volume: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", _frozen(self.dates, "datetime64[D]"))
        for name in ("open", "high", "low", "close", "volume"):
            object.__setattr__(self, name, _frozen(getattr(self, name), np.float64))
        n = len(self.dates)
        if any(len(getattr(self, c)) != n for c in ("open", "high", "low", "close", "volume")):
            raise DataError(f"{self.symbol}: column lengths differ")

    @classmethod
    def from_bars(cls, symbol: str, bars: Sequence[Bar]) -> "StockSeries":
        return cls(
            symbol,
            [np.datetime64(b.date, "D") for b in bars],
            [b.open for b in bars],
            [b.high for b in bars],
            [b.low for b in bars],
            [b.close for b in bars],
            [b.volume for b in bars],
        )

    def __len__(self) -> int:
        return len(self.dates)

    @property
    def bars(self) -> list[Bar]:
        return [
            Bar(d.astype(date), o, h, lo, c, v)
            for d, o, h, lo, c, v in zip(
                self.dates, self.open, self.high, self.low, self.close, self.volume
            )
        ]

    def take(self, index) -> "StockSeries":
        return StockSeries(
            self.symbol,
            self.dates[index],
            self.open[index],
            self.high[index],
            self.low[index],
            self.close[index],
            self.volume[index],
        )

    def between(self, start, end) -> "StockSeries":
        """Bars with ``start <= date <= end``."""
        lo = np.searchsorted(self.dates, np.datetime64(start, "D"), side="left")
        hi = np.searchsorted(self.dates, np.datetime64(end, "D"), side="right")
        return self.take(slice(lo, hi))

    def until(self, end) -> "StockSeries":
        hi = np.searchsorted(self.dates, np.datetime64(end, "D"), side="right")
        return self.take(slice(0, hi))

    def equals(self, other: "StockSeries") -> bool:
        return self.symbol == other.symbol and all(
            np.array_equal(getattr(self, c), getattr(other, c))
            for c in ("dates", "open", "high", "low", "close", "volume")
        )


@dataclass(frozen=True)
class Universe:
    series_by_symbol: Mapping[str, StockSeries]
    target_symbols: tuple[str, ...]
    dropped_rows: Mapping[str, int] = field(default_factory=dict)

    def __post_init__(self):
        missing = [s for s in self.target_symbols if s not in self.series_by_symbol]
        if missing:
            raise DataError(f"target symbols not in universe: {missing}")

    @property
    def symbols(self) -> list[str]:
        return sorted(self.series_by_symbol)

    def __getitem__(self, symbol: str) -> StockSeries:
        return self.series_by_symbol[symbol]

    def __iter__(self) -> Iterator[StockSeries]:
        return (self.series_by_symbol[s] for s in self.symbols)

    def __len__(self) -> int:
        return len(self.series_by_symbol)

    def replace(self, series: StockSeries) -> "Universe":
        updated = dict(self.series_by_symbol)
        updated[series.symbol] = series
        return Universe(updated, self.target_symbols, self.dropped_rows)


@dataclass(frozen=True)
class FoldPlan:
    fold_index: int
    train_range: tuple[np.datetime64, np.datetime64]
    test_range: tuple[np.datetime64, np.datetime64]
    # Positions into the partitioned series, half-open.
    train_slice: slice
    test_slice: slice


def validate_series(s: StockSeries) -> StockSeries:
    """Sort by date, collapse duplicate dates (last read wins) and drop
    bars with non-positive prices. Gaps are left in place."""
    order = np.argsort(s.dates, kind="stable")
    s = s.take(order)
    keep = np.ones(len(s), dtype=bool)
    if len(s) > 1:
        keep[:-1] = s.dates[:-1] != s.dates[1:]
    positive = (s.open > 0) & (s.high > 0) & (s.low > 0) & (s.close > 0)
    out = s.take(np.flatnonzero(keep & positive))
    if len(out) < 2:
        raise InsufficientDataError(f"{s.symbol}: fewer than 2 valid bars")
    return out


def parse_bars_csv(
    path,
    schema: Mapping[str, str] | None = None,
    targets: Sequence[str] = (),
) -> Universe:
    """Read a long-format OHLCV CSV into a :class:`Universe`.

    Parameters
    ----------
    path : path-like
        CSV with a header row.
    schema : mapping, optional
        Canonical column name (``date, open, high, low, close, volume,
        symbol``) to the header used in the file.
    targets : sequence of str
        Symbols that must end up with valid bars.
    """
    schema = {**DEFAULT_SCHEMA, **(schema or {})}
    path = Path(path)
    try:
        raw = pd.read_csv(path, dtype={schema["symbol"]: str})
    except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    missing = [c for c in COLUMNS if schema[c] not in raw.columns]
    if missing:
        raise DataError(f"{path}: missing mapped columns {missing}")
    df = raw[[schema[c] for c in COLUMNS]].copy()
    df.columns = list(COLUMNS)
    df["date"] = pd.to_datetime(df["date"], format="%Y-%m-%d", errors="coerce")
    for c in ("open", "high", "low", "close", "volume"):
        df[c] = pd.to_numeric(df[c], errors="coerce")

    valid = (
        df["date"].notna()
        & df["symbol"].notna()
        & (df["open"] > 0)
        & (df["close"] > 0)
        & (df["volume"] >= 0)
        & (df["high"] >= df[["open", "close"]].max(axis=1))
        & (df["low"] <= df[["open", "close"]].min(axis=1))
    )
    dropped = df.loc[~valid, "symbol"].fillna("").value_counts().to_dict()
    if dropped:
        logger.info("dropped %d invalid rows from %s", int(sum(dropped.values())), path)
    df = df.loc[valid]

    series = {}
    for symbol, g in df.groupby("symbol", sort=True):
        s = StockSeries(
            symbol,
            g["date"].to_numpy().astype("datetime64[D]"),
            g["open"].to_numpy(),
            g["high"].to_numpy(),
            g["low"].to_numpy(),
            g["close"].to_numpy(),
            g["volume"].to_numpy(),
        )
        try:
            series[symbol] = validate_series(s)
        except InsufficientDataError:
            logger.warning("skipping %s: fewer than 2 valid bars", symbol)
    for t in targets:
        if t not in series:
            raise InsufficientDataError(f"no valid rows for target symbol {t}")
    return Universe(series, tuple(targets), {str(k): int(v) for k, v in dropped.items()})


def write_bars_csv(universe: Universe, path) -> None:
    frames = [
        pd.DataFrame(
            {
                "date": pd.to_datetime(s.dates).strftime("%Y-%m-%d"),
                "open": s.open,
                "high": s.high,
                "low": s.low,
                "close": s.close,
                "volume": s.volume,
                "symbol": s.symbol,
            }
        )
        for s in universe
    ]
    pd.concat(frames, ignore_index=True).to_csv(path, index=False, float_format="%.4f")


def partition_folds(s: StockSeries, n: int) -> list[FoldPlan]:
    """Split the timeline into ``n + 1`` equal segments.

    Fold ``i`` trains on segment ``i`` and tests on the first half of
    segment ``i + 1``. Bars left over by the integer division sit at the
    end and are only used as forward prices for targets.
    """
    if n < 1:
        raise ValueError("fold count must be >= 1")
    if len(s) < 2 * (n + 1):
        raise InsufficientDataError(
            f"{s.symbol}: {len(s)} bars too short for {n} folds"
        )
    width = len(s) // (n + 1)
    half = width // 2
    plans = []
    for i in range(n):
        a, b = i * width, (i + 1) * width
        train, test = slice(a, b), slice(b, b + half)
        plans.append(
            FoldPlan(
                i + 1,
                (s.dates[a], s.dates[b - 1]),
                (s.dates[b], s.dates[b + half - 1]),
                train,
                test,
            )
        )
    return plans
