"""Financial features, targets, normalization and instance assembly.

Instances are built per (target stock, fold). Everything fitted here
(normalizers, SAX codec, PCA) sees train-range rows only; test features may
read earlier prices, which were public at the time.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.signal import lfilter

from stocksim.errors import ConfigError, DataError, InsufficientDataError, NotFittedError
from stocksim.market_data import StockSeries
from stocksim.segment import DEFAULT_ALPHABET, PcaModel, SaxCodec, pca_fit, sax_encode

INCREASE = 1
DECREASE = 0

FEATURE_MODES = ("univariate", "multivariate")
TRANSFORMS = ("raw", "sax", "pca")
PREDICT_VALUES = ("close", "proc")
MULTIVARIATE_FEATURES = ("close", "macd_hist", "rsi", "proc", "open_close", "volume")
# columns scaled when transform is raw; rsi/macd/proc keep their native ranges
SCALED_FEATURES = ("close", "open_close", "volume")


# ---------------------------------------------------------------- indicators


def proc(closes, span: int = 1) -> np.ndarray:
    """Price rate of change; ``out[t] = (c[t+span] - c[t]) / c[t]``."""
    c = np.asarray(closes, dtype=float)
    if span < 1:
        raise ValueError("span must be >= 1")
    if len(c) <= span:
        raise InsufficientDataError(f"need more than {span} prices")
    if np.any(c <= 0):
        raise DataError("non-positive price in PROC input")
    return (c[span:] - c[:-span]) / c[:-span]


def rsi(closes, period: int = 14) -> np.ndarray:
    """Relative strength index from simple averages of the trailing changes.

    ``out[i]`` belongs to ``closes[i + period]``.
    """
    c = np.asarray(closes, dtype=float)
    if len(c) <= period:
        raise InsufficientDataError(f"RSI needs more than {period} prices")
    d = sliding_window_view(np.diff(c), period)
    gain = np.where(d > 0, d, 0.0).mean(axis=1)
    loss = np.where(d < 0, -d, 0.0).mean(axis=1)
    out = np.full(len(gain), 50.0)
    np.divide(100.0 * gain, gain + loss, out=out, where=(gain + loss) > 0)
    return out


def ema(x, span: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    alpha = 2.0 / (span + 1.0)
    y, _ = lfilter([alpha], [1.0, alpha - 1.0], x, zi=[(1.0 - alpha) * x[0]])
    return y


def macd(closes, fast: int = 12, slow: int = 26, signal: int = 9):
    """Return ``(macd_line, signal_line, histogram)``, full input length."""
    c = np.asarray(closes, dtype=float)
    if fast >= slow:
        raise ValueError("fast span must be shorter than slow span")
    if len(c) < slow:
        raise InsufficientDataError(f"MACD needs at least {slow} prices")
    line = ema(c, fast) - ema(c, slow)
    sig = ema(line, signal)
    return line, sig, line - sig


# ---------------------------------------------------------------- normalizer


@dataclass(frozen=True)
class Normalizer:
    mean: np.ndarray | None = None
    std: np.ndarray | None = None

    @property
    def fitted(self) -> bool:
        return self.mean is not None

    def apply(self, values) -> np.ndarray:
        return apply_normalizer(self, values)

    def invert(self, values) -> np.ndarray:
        if not self.fitted:
            raise NotFittedError("normalizer used before fit")
        return np.asarray(values, dtype=float) * self.std + self.mean


def fit_normalizer(values) -> Normalizer:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        raise InsufficientDataError("cannot fit normalizer on empty data")
    return Normalizer(np.nanmean(v, axis=0), np.nanstd(v, axis=0))


def apply_normalizer(n: Normalizer, values) -> np.ndarray:
    if not n.fitted:
        raise NotFittedError("normalizer used before fit")
    v = np.asarray(values, dtype=float)
    std = np.asarray(n.std, dtype=float)
    safe = np.where(std > 0, std, 1.0)
    return np.where(std > 0, (v - n.mean) / safe, 0.0 * v)


# ---------------------------------------------------------------- configs


@dataclass(frozen=True)
class ProcessingConfig:
    feature_mode: str = "univariate"
    transform: str = "sax"
    window: int | None = None  # None means timepoint modeling
    predict_value: str = "proc"
    horizon: int = 1
    alphabet_size: int = DEFAULT_ALPHABET

    def __post_init__(self):
        if self.feature_mode not in FEATURE_MODES:
            raise ConfigError(f"unknown feature mode {self.feature_mode!r}")
        if self.transform not in TRANSFORMS:
            raise ConfigError(f"unknown transform {self.transform!r}")
        if self.predict_value not in PREDICT_VALUES:
            raise ConfigError(f"unknown predict value {self.predict_value!r}")
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        if self.window is not None:
            if self.window < 1:
                raise ConfigError("window size must be >= 1")
            if self.feature_mode != "univariate":
                raise ConfigError("window modeling is univariate only")

    @property
    def temporal(self) -> str:
        return "timepoint" if self.window is None else f"window{self.window}"


def parse_temporal(token: str) -> int | None:
    token = token.strip().lower()
    if token == "timepoint":
        return None
    if token.startswith("window") and token[6:].isdigit():
        return int(token[6:])
    raise ConfigError(f"unknown temporal mode {token!r}")


# ---------------------------------------------------------------- targets


def build_targets(s: StockSeries, config: ProcessingConfig):
    """Per as-of index ``t`` in ``0 .. len-h-1``: ``(target_value, target_class)``.

    A flat move is labelled ``DECREASE``.
    """
    h = config.horizon
    c = s.close
    if len(c) <= h:
        raise InsufficientDataError(f"{s.symbol}: series not longer than horizon {h}")
    now, later = c[:-h], c[h:]
    value = (later - now) / now if config.predict_value == "proc" else later.copy()
    cls = np.where(later > now, INCREASE, DECREASE).astype(np.int64)
    return value, cls


# ---------------------------------------------------------------- instances


@dataclass(frozen=True)
class Instance:
    features: np.ndarray
    target_value: float
    target_class: int
    as_of_date: np.datetime64
    source_symbol: str
    weight: float = 1.0
    close: float = float("nan")


@dataclass(frozen=True)
class FeatureMatrix:
    X: np.ndarray
    target_value: np.ndarray
    target_class: np.ndarray
    as_of: np.ndarray
    source: np.ndarray
    weight: np.ndarray
    close: np.ndarray
    feature_names: tuple[str, ...] = ()

    def __len__(self) -> int:
        return len(self.target_value)

    def __getitem__(self, i) -> Instance:
        return Instance(
            self.X[i],
            float(self.target_value[i]),
            int(self.target_class[i]),
            self.as_of[i],
            str(self.source[i]),
            float(self.weight[i]),
            float(self.close[i]),
        )

    @classmethod
    def concat(cls, parts: Sequence["FeatureMatrix"]) -> "FeatureMatrix":
        return cls(
            np.vstack([p.X for p in parts]),
            np.concatenate([p.target_value for p in parts]),
            np.concatenate([p.target_class for p in parts]),
            np.concatenate([p.as_of for p in parts]),
            np.concatenate([p.source for p in parts]),
            np.concatenate([p.weight for p in parts]),
            np.concatenate([p.close for p in parts]),
            parts[0].feature_names,
        )


@dataclass
class FittedProcessing:
    """Train-fold artifacts; kept so callers can inspect or compare them."""

    config: ProcessingConfig
    normalizers: dict[str, Normalizer] = field(default_factory=dict)
    target_normalizers: dict[str, Normalizer] = field(default_factory=dict)
    codec: SaxCodec | None = None
    pca: PcaModel | None = None


def _pad_front(values: np.ndarray, n: int) -> np.ndarray:
    out = np.full(n, np.nan)
    out[n - len(values):] = values
    return out


def raw_columns(s: StockSeries, config: ProcessingConfig) -> tuple[np.ndarray, tuple[str, ...]]:
    """Un-normalized per-date feature columns for one series (NaN where undefined)."""
    n = len(s)
    if config.feature_mode == "univariate":
        if config.predict_value == "close":
            col = s.close.astype(float)
        else:
            col = _pad_front(proc(s.close, 1), n)
        return col[:, None], (config.predict_value,)
    cols = {
        "close": s.close.astype(float),
        "macd_hist": macd(s.close)[2] if n >= 26 else np.full(n, np.nan),
        "rsi": _pad_front(rsi(s.close), n) if n > 14 else np.full(n, np.nan),
        "proc": _pad_front(proc(s.close, 1), n),
        "open_close": s.open - s.close,
        "volume": s.volume.astype(float),
    }
    return np.column_stack([cols[k] for k in MULTIVARIATE_FEATURES]), MULTIVARIATE_FEATURES


def _in_range(dates, rng) -> np.ndarray:
    return (dates >= rng[0]) & (dates <= rng[1])


def _scale_mask(names: tuple[str, ...], config: ProcessingConfig) -> np.ndarray:
    if config.feature_mode == "univariate" or config.transform != "raw":
        return np.ones(len(names), dtype=bool)
    return np.array([n in SCALED_FEATURES for n in names])


def _scaled_columns(s, config, train_range, fitted):
    cols, names = raw_columns(s, config)
    train = cols[_in_range(s.dates, train_range)]
    if not np.isfinite(train).any():
        raise InsufficientDataError(f"{s.symbol}: no defined train values")
    norm = fit_normalizer(train)
    fitted.normalizers[s.symbol] = norm
    mask = _scale_mask(names, config)
    out = cols.copy()
    out[:, mask] = apply_normalizer(
        Normalizer(norm.mean[mask], norm.std[mask]), cols[:, mask]
    )
    if config.transform == "sax":
        defined = np.isfinite(out)
        out = np.where(defined, sax_encode(np.nan_to_num(out), fitted.codec), np.nan)
    return out, names


def _targets_full(s: StockSeries, config, train_range, fitted):
    """Target arrays at full series length (NaN / -1 past the last as-of)."""
    value, cls = build_targets(s, config)
    n, h = len(s), config.horizon
    if config.predict_value == "close":
        tn = fit_normalizer(s.close[_in_range(s.dates, train_range)])
        fitted.target_normalizers[s.symbol] = tn
        value = apply_normalizer(tn, value)
    tv = np.full(n, np.nan)
    tv[: n - h] = value
    tc = np.full(n, -1, dtype=np.int64)
    tc[: n - h] = cls
    return tv, tc


def _rows(s, feats, tv, tc, mask, weight, names) -> FeatureMatrix:
    idx = np.flatnonzero(mask & np.isfinite(feats).all(axis=1) & np.isfinite(tv))
    return FeatureMatrix(
        feats[idx],
        tv[idx],
        tc[idx],
        s.dates[idx],
        np.full(len(idx), s.symbol, dtype=object),
        np.full(len(idx), float(weight)),
        s.close[idx].astype(float),
        names,
    )


def _train_mask(s: StockSeries, train_range, h: int, lookback: int = 1) -> np.ndarray:
    """As-of rows whose target date, and first window date, lie inside the
    train range."""
    inside = _in_range(s.dates, train_range)
    n = len(s)
    ok = np.zeros(n, dtype=bool)
    ok[: n - h] = inside[: n - h] & inside[h:]
    if lookback > 1:
        first = np.zeros(n, dtype=bool)
        first[lookback - 1:] = inside[: n - lookback + 1]
        ok &= first
    return ok


def _windows(col: np.ndarray, w: int) -> np.ndarray:
    n = len(col)
    out = np.full((n, w), np.nan)
    if n >= w:
        out[w - 1:] = sliding_window_view(col, w)
    return out


def build_instances(
    target: StockSeries,
    peers: Sequence[StockSeries],
    config: ProcessingConfig,
    train_range,
    test_range,
    weights: Mapping[str, float] | None = None,
) -> tuple[FeatureMatrix, FeatureMatrix, FittedProcessing]:
    """Assemble train and test matrices for one target stock and fold.

    Timepoint modeling joins each peer's value as an extra column on shared
    dates. Window modeling adds each peer's own windows as extra *training*
    rows; test rows always come from the target alone.

    Peers are used in symbol order, so the result does not depend on how
    they were ranked.
    """
    fitted = FittedProcessing(config, codec=SaxCodec.fit(config.alphabet_size))
    peers = sorted(peers, key=lambda p: p.symbol)
    weights = weights or {}
    h = config.horizon
    # peer data past the train range is never needed for window training rows
    if config.window is not None:
        peers = [p.until(train_range[1]) for p in peers]

    feats, names = _scaled_columns(target, config, train_range, fitted)
    tv, tc = _targets_full(target, config, train_range, fitted)

    if config.window is not None:
        w = config.window
        if w > int(_in_range(target.dates, train_range).sum()):
            raise InsufficientDataError(f"window {w} longer than train range")
        names = tuple(f"{names[0]}_lag{w - 1 - j}" for j in range(w))
        wf = _windows(feats[:, 0], w)
        parts = [_rows(target, wf, tv, tc, _train_mask(target, train_range, h, w), 1.0, names)]
        for p in peers:
            pf, _ = _scaled_columns(p, config, train_range, fitted)
            ptv, ptc = _targets_full(p, config, train_range, fitted)
            parts.append(
                _rows(p, _windows(pf[:, 0], w), ptv, ptc,
                      _train_mask(p, train_range, h, w), weights.get(p.symbol, 1.0), names)
            )
        train = FeatureMatrix.concat(parts)
        test = _rows(target, wf, tv, tc, _in_range(target.dates, test_range), 1.0, names)
    else:
        dates = target.dates
        keep = np.ones(len(target), dtype=bool)
        cols = [feats]
        value_cfg = ProcessingConfig("univariate", config.transform if config.transform != "pca" else "raw",
                                     None, config.predict_value, h, config.alphabet_size)
        for p in peers:
            pf, _ = _scaled_columns(p, value_cfg, train_range, fitted)
            pos = np.searchsorted(p.dates, dates)
            pos_c = np.minimum(pos, len(p) - 1)
            hit = (pos < len(p)) & (p.dates[pos_c] == dates)
            keep &= hit
            cols.append(np.where(hit, pf[pos_c, 0], np.nan)[:, None])
            names = names + (f"peer_{p.symbol}",)
        feats = np.hstack(cols)
        if config.transform == "pca":
            train_rows = _train_mask(target, train_range, h) & keep & np.isfinite(feats).all(axis=1)
            fitted.pca = pca_fit(feats[train_rows])
            good = np.isfinite(feats).all(axis=1)
            proj = np.full((len(feats), 3), np.nan)
            proj[good] = fitted.pca.transform(feats[good])
            feats, names = proj, ("pc1", "pc2", "pc3")
        train = _rows(target, feats, tv, tc, _train_mask(target, train_range, h) & keep, 1.0, names)
        test = _rows(target, feats, tv, tc, _in_range(dates, test_range) & keep, 1.0, names)

    if config.window is not None and config.transform == "pca":
        fitted.pca = pca_fit(train.X)
        train = _project(train, fitted.pca)
        test = _project(test, fitted.pca)
    if len(train) == 0:
        raise InsufficientDataError(f"{target.symbol}: empty train matrix")
    return train, test, fitted


def _project(m: FeatureMatrix, model: PcaModel) -> FeatureMatrix:
    X = model.transform(m.X) if len(m) else np.empty((0, 3))
    return FeatureMatrix(X, m.target_value, m.target_class, m.as_of, m.source,
                         m.weight, m.close, ("pc1", "pc2", "pc3"))
