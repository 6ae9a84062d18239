from stocksim.similarity.align import (
    AlignedPair,
    TimeValues,
    align,
    delayed_time_join,
    pad_align,
    pip_align,
    pip_select,
    time_join,
)
from stocksim.similarity.cointegration import dist_cointegration, engle_granger
from stocksim.similarity.distance import (
    dist_dtw,
    dist_euclidean,
    dist_mindist,
    dist_pearson,
    dtw_distance,
)
from stocksim.similarity.rank import (
    RankedPeers,
    SimilarityConfig,
    instance_weights,
    rank_top_k,
    score_candidates,
)

__all__ = [
    "AlignedPair",
    "RankedPeers",
    "SimilarityConfig",
    "TimeValues",
    "align",
    "delayed_time_join",
    "dist_cointegration",
    "dist_dtw",
    "dist_euclidean",
    "dist_mindist",
    "dist_pearson",
    "dtw_distance",
    "engle_granger",
    "instance_weights",
    "pad_align",
    "pip_align",
    "pip_select",
    "rank_top_k",
    "score_candidates",
    "time_join",
]
