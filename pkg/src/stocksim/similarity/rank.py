"""Score every other stock against a target and keep the k closest."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from stocksim.errors import ConfigError, StockSimError
from stocksim.market_data import StockSeries, Universe
from stocksim.preprocess import proc
from stocksim.segment import DEFAULT_ALPHABET, SaxCodec, sax_encode
from stocksim.similarity.align import FIXERS, AlignedPair, TimeValues, align
from stocksim.similarity.cointegration import dist_cointegration
from stocksim.similarity.distance import dist_dtw, dist_euclidean, dist_mindist, dist_pearson

logger = logging.getLogger(__name__)

FUNCTIONS = ("euclidean", "pearson", "dtw", "mindist", "cointegration")
VALUE_FIELDS = ("close", "proc")


@dataclass(frozen=True)
class SimilarityConfig:
    function: str = "cointegration"
    value_field: str = "proc"
    fixer: str = "time_join"
    k: int = 10
    delay: int = 1
    pip_fraction: float = 0.10
    alphabet_size: int = DEFAULT_ALPHABET

    def __post_init__(self):
        if self.function not in FUNCTIONS:
            raise ConfigError(f"unknown similarity function {self.function!r}")
        if self.value_field not in VALUE_FIELDS:
            raise ConfigError(f"unknown similarity value {self.value_field!r}")
        if self.fixer not in FIXERS:
            raise ConfigError(f"unknown fixer {self.fixer!r}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not 0 < self.pip_fraction <= 1:
            raise ConfigError("pip_fraction must be in (0, 1]")
        if self.fixer == "delayed_time_join" and self.delay < 1:
            raise ConfigError("delay must be >= 1")


@dataclass(frozen=True)
class RankedPeers:
    target: str
    peers: tuple[tuple[str, float], ...]
    config: SimilarityConfig
    shortfall: bool = False
    skipped: Mapping[str, str] = field(default_factory=dict)

    @property
    def symbols(self) -> list[str]:
        return [s for s, _ in self.peers]

    def __len__(self) -> int:
        return len(self.peers)


def _znorm(v: np.ndarray) -> np.ndarray:
    sd = v.std()
    return (v - v.mean()) / sd if sd > 0 else np.zeros_like(v)


def series_values(s: StockSeries, value_field: str) -> TimeValues:
    if value_field == "close":
        return TimeValues(s.dates, s.close.astype(float))
    return TimeValues(s.dates[1:], proc(s.close, 1))


def score_pair(pair: AlignedPair, function: str, codec: SaxCodec | None = None) -> float:
    """Distance under ``function``. Euclidean, DTW and MINDIST compare the
    z-normalized shapes; Pearson and cointegration use the values as given."""
    if function == "pearson":
        return dist_pearson(pair)
    if function == "cointegration":
        return dist_cointegration(pair)
    a, b = _znorm(np.asarray(pair.a)), _znorm(np.asarray(pair.b))
    z = AlignedPair(pair.dates, a, b)
    if function == "euclidean":
        return dist_euclidean(z)
    if function == "dtw":
        return dist_dtw(z)
    if function == "mindist":
        codec = codec or SaxCodec.fit(DEFAULT_ALPHABET)
        return dist_mindist(sax_encode(a, codec), sax_encode(b, codec), codec, len(a))
    raise ConfigError(f"unknown similarity function {function!r}")


def score_candidates(
    target: str,
    universe: Universe,
    config: SimilarityConfig,
    train_range,
    cache: dict | None = None,
) -> tuple[list[tuple[str, float]], dict[str, str]]:
    """All scoreable candidates sorted by distance (ties by symbol), plus the
    reasons candidates were skipped.

    Only bars inside ``train_range`` are looked at. ``cache`` may be shared
    across calls that differ only in ``k``.
    """
    key = (target, config.function, config.value_field, config.fixer, config.delay,
           config.pip_fraction, config.alphabet_size, str(train_range[0]), str(train_range[1]))
    if cache is not None and key in cache:
        return cache[key]
    codec = SaxCodec.fit(config.alphabet_size)
    lo, hi = train_range

    def values(sym):
        return series_values(universe[sym].between(lo, hi), config.value_field)

    tx = values(target)
    scored, skipped = [], {}
    for sym in universe.symbols:
        if sym == target:
            continue
        try:
            pair = align(tx, values(sym), config.fixer, config.delay, config.pip_fraction)
            d = score_pair(pair, config.function, codec)
        except (StockSimError, ValueError) as exc:
            skipped[sym] = f"{getattr(exc, 'tag', 'error')}: {exc}"
            continue
        if not np.isfinite(d):
            skipped[sym] = "non-finite distance"
            continue
        scored.append((sym, float(d)))
    scored.sort(key=lambda t: (t[1], t[0]))
    if cache is not None:
        cache[key] = (scored, skipped)
    return scored, skipped


def rank_top_k(
    target: str,
    universe: Universe,
    config: SimilarityConfig,
    train_range,
    cache: dict | None = None,
) -> RankedPeers:
    scored, skipped = score_candidates(target, universe, config, train_range, cache)
    if skipped:
        logger.debug("%s: skipped %d candidates", target, len(skipped))
    return RankedPeers(
        target,
        tuple(scored[: config.k]),
        config,
        shortfall=len(scored) < config.k,
        skipped=dict(skipped),
    )


def instance_weights(peers: RankedPeers) -> dict[str, float]:
    """``1 / (1 + distance)`` per peer; the target itself weighs 1."""
    w = {sym: 1.0 / (1.0 + d) for sym, d in peers.peers}
    w[peers.target] = 1.0
    return w


