"""Similar-stock enrichment backtests for stock direction prediction."""

from stocksim.errors import StockSimError
from stocksim.market_data import (
    Bar,
    FoldPlan,
    StockSeries,
    Universe,
    parse_bars_csv,
    partition_folds,
    validate_series,
)

__version__ = "0.1.0"

__all__ = [
    "Bar",
    "FoldPlan",
    "StockSeries",
    "StockSimError",
    "Universe",
    "parse_bars_csv",
    "partition_folds",
    "validate_series",
]
