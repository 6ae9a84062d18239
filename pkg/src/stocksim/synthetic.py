"""Seeded synthetic markets with sector structure.

Log prices are the sum of a market factor, a per-sector factor and a
stationary idiosyncratic AR(1) term. Sector factors are random walks, so
stocks of one sector are co-integrated with each other and not with other
sectors. Optionally, a sector factor's daily returns follow an AR(1)
process, which plants a next-day predictable component shared by the
sector.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

from stocksim.market_data import StockSeries, Universe


@dataclass(frozen=True)
class MarketParams:
    length: int = 1250
    start: str = "2012-01-03"
    market_vol: float = 0.004
    sector_vol: float = 0.012
    idio_vol: float = 0.006
    idio_ar: float = 0.9
    # AR(1) coefficient of each sector's daily factor return, cycled over sectors
    sector_momentum: tuple[float, ...] = (0.0,)
    # bars dropped at random per stock, so symbols do not share every date
    gaps: int = 0
    base_volume: float = 1e6


@dataclass(frozen=True)
class SyntheticMarket:
    universe: Universe
    sectors: dict[str, int]

    def sector_peers(self, symbol: str) -> set[str]:
        s = self.sectors[symbol]
        return {k for k, v in self.sectors.items() if v == s and k != symbol}


def _ar1(rng, phi: float, sigma: float, n: int) -> np.ndarray:
    eps = rng.normal(0.0, sigma, n)
    out = np.empty(n)
    out[0] = eps[0] / np.sqrt(max(1e-12, 1 - phi * phi)) if abs(phi) < 1 else eps[0]
    for t in range(1, n):
        out[t] = phi * out[t - 1] + eps[t]
    return out


def _bars(rng, symbol, dates, log_close, base_volume) -> StockSeries:
    close = 50.0 * np.exp(log_close)
    open_ = np.empty_like(close)
    open_[0] = close[0]
    open_[1:] = close[:-1] * np.exp(rng.normal(0.0, 0.003, len(close) - 1))
    top = np.maximum(open_, close)
    bottom = np.minimum(open_, close)
    high = top * np.exp(np.abs(rng.normal(0.0, 0.004, len(close))))
    low = bottom * np.exp(-np.abs(rng.normal(0.0, 0.004, len(close))))
    volume = np.round(base_volume * np.exp(rng.normal(0.0, 0.3, len(close))))
    return StockSeries(symbol, dates, open_, high, low, close, volume)


def sector_market(
    sectors,
    params: MarketParams = MarketParams(),
    seed: int = 0,
    targets=(),
) -> SyntheticMarket:
    """Build a universe from ``sectors``: a mapping symbol -> sector id."""
    rng = np.random.default_rng(seed)
    symbols = sorted(sectors)
    n = params.length
    dates = pd.bdate_range(params.start, periods=n).values.astype("datetime64[D]")
    market = np.cumsum(rng.normal(0.0, params.market_vol, n))
    ids = sorted(set(sectors.values()))
    factor = {}
    for j, sid in enumerate(ids):
        phi = params.sector_momentum[j % len(params.sector_momentum)]
        factor[sid] = np.cumsum(_ar1(rng, phi, params.sector_vol, n))
    series = {}
    for sym in symbols:
        beta = rng.uniform(0.8, 1.2)
        idio = _ar1(rng, params.idio_ar, params.idio_vol, n)
        s = _bars(rng, sym, dates, market * beta + factor[sectors[sym]] + idio, params.base_volume)
        if params.gaps > 0:
            keep = np.ones(n, dtype=bool)
            keep[1 + rng.choice(n - 2, size=params.gaps, replace=False)] = False
            s = s.take(keep)
        series[sym] = s
    return SyntheticMarket(Universe(series, tuple(targets)), dict(sectors))


def sector_universe(
    n_stocks: int = 30,
    n_sectors: int = 3,
    params: MarketParams = MarketParams(),
    seed: int = 0,
    targets=(),
) -> SyntheticMarket:
    """``n_stocks`` symbols ``S00, S01, ...`` dealt round-robin into sectors."""
    sectors = {f"S{i:02d}": i % n_sectors for i in range(n_stocks)}
    return sector_market(sectors, params, seed, targets)


# The bundled demo dataset: familiar tickers, synthetic prices.
DEMO_SECTORS = {
    "DIS": 0, "GOOGL": 0,
    "KO": 1, "JNJ": 1,
    "GE": 2, "MMM": 2, "JPM": 2,
}


def demo_market(seed: int = 2012) -> SyntheticMarket:
    params = MarketParams(length=1262, gaps=12, sector_momentum=(0.1, -0.1, 0.2))
    return sector_market(DEMO_SECTORS, params, seed, targets=tuple(sorted(DEMO_SECTORS)))
