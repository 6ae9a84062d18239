"""Exception types shared across the toolkit.

Every error carries a short ``tag`` that the grid runner writes into the
``error_tag`` column when a cell fails.
"""


class StockSimError(ValueError):
    tag = "error"


class DataError(StockSimError):
    tag = "bad_data"


class InsufficientDataError(StockSimError):
    tag = "insufficient_data"


class AlignmentError(StockSimError):
    tag = "alignment_failed"


class DistanceError(StockSimError):
    tag = "distance_failed"


class RankDeficientError(StockSimError):
    tag = "rank_deficient"


class NotFittedError(StockSimError):
    tag = "not_fitted"


class ConfigError(StockSimError):
    tag = "bad_config"


class InsufficientSymbolsError(StockSimError):
    tag = "insufficient_symbols"
