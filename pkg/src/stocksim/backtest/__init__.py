from stocksim.backtest.grid import (
    Enrichment,
    ExperimentGrid,
    GridCell,
    grid_from_mapping,
    load_grid,
    parse_config_text,
)
from stocksim.backtest.metrics import (
    Sharpe,
    TradeLog,
    buy_and_hold,
    evaluate_classification,
    sharpe_ratio,
    trade_returns,
)
from stocksim.backtest.report import aggregate, read_report, write_report
from stocksim.backtest.runner import (
    ENRICHMENT_FAILED,
    EvaluationRow,
    check_leakage,
    derive_seed,
    run_grid,
    run_stock_fold,
    select_random_stocks,
)

__all__ = [
    "ENRICHMENT_FAILED",
    "Enrichment",
    "EvaluationRow",
    "ExperimentGrid",
    "GridCell",
    "Sharpe",
    "TradeLog",
    "aggregate",
    "buy_and_hold",
    "check_leakage",
    "derive_seed",
    "evaluate_classification",
    "grid_from_mapping",
    "load_grid",
    "parse_config_text",
    "read_report",
    "run_grid",
    "run_stock_fold",
    "select_random_stocks",
    "sharpe_ratio",
    "trade_returns",
    "write_report",
]
