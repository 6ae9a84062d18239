"""Piecewise aggregate approximation, SAX discretization and PCA."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.stats import norm

from stocksim.errors import NotFittedError, RankDeficientError

DEFAULT_ALPHABET = 8


def paa(series, w: int) -> np.ndarray:
    """Mean of each of ``w`` equal-width intervals.

    Interval boundaries may fall inside a sample; that sample then
    contributes to both neighbours in proportion to the overlap.
    """
    x = np.asarray(series, dtype=float)
    n = len(x)
    if not 1 <= w <= n:
        raise ValueError(f"segment count {w} outside [1, {n}]")
    if w == n:
        return x.copy()
    # integrate the step function x(t) on [0, n) and difference at the cuts
    cum = np.concatenate([[0.0], np.cumsum(x)])
    cuts = np.arange(w + 1) * (n / w)
    whole = np.minimum(np.floor(cuts).astype(int), n)
    frac = cuts - whole
    extra = np.where(whole < n, x[np.minimum(whole, n - 1)] * frac, 0.0)
    area = cum[whole] + extra
    return np.diff(area) / (n / w)


@dataclass(frozen=True)
class SaxCodec:
    alphabet_size: int = DEFAULT_ALPHABET
    breakpoints: np.ndarray | None = None

    @classmethod
    def fit(cls, alphabet_size: int = DEFAULT_ALPHABET) -> "SaxCodec":
        """Gaussian equiprobable cut points for ``alphabet_size`` symbols."""
        if alphabet_size < 2:
            raise ValueError("alphabet size must be >= 2")
        bp = norm.ppf(np.arange(1, alphabet_size) / alphabet_size)
        bp.setflags(write=False)
        return cls(alphabet_size, bp)

    @property
    def fitted(self) -> bool:
        return self.breakpoints is not None

    def render(self, symbols) -> str:
        return "".join(chr(ord("a") + int(s)) for s in symbols)


def sax_encode(series, codec: SaxCodec) -> np.ndarray:
    """Map each (already z-normalized) value to a symbol index.

    The symbol is the number of breakpoints at or below the value, so the
    word keeps the input length.
    """
    if not codec.fitted:
        raise NotFittedError("SAX codec has no breakpoints")
    x = np.asarray(series, dtype=float)
    return np.searchsorted(codec.breakpoints, x, side="right").astype(np.int64)


def sax_word(series, codec: SaxCodec, w: int) -> np.ndarray:
    return sax_encode(paa(series, w), codec)


@dataclass(frozen=True)
class PcaModel:
    mean: np.ndarray
    components: np.ndarray
    explained: np.ndarray

    def transform(self, X) -> np.ndarray:
        return (np.asarray(X, dtype=float) - self.mean) @ self.components.T


def pca_fit(X, n_components: int = 3, tol: float = 1e-10) -> PcaModel:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[0] < n_components or X.shape[1] < n_components:
        raise RankDeficientError(
            f"PCA needs at least {n_components} rows and columns, got {X.shape}"
        )
    mean = X.mean(axis=0)
    cov = np.cov(X - mean, rowvar=False, bias=True)
    vals, vecs = np.linalg.eigh(np.atleast_2d(cov))
    vals, vecs = vals[::-1], vecs[:, ::-1]
    vals = np.clip(vals, 0.0, None)
    scale = vals[0] if vals.size and vals[0] > 0 else 1.0
    rank = int(np.sum(vals > tol * scale)) if vals[0] > 0 else 0
    if rank < n_components:
        raise RankDeficientError(f"covariance rank {rank} < {n_components}")
    comps = vecs[:, :n_components].T.copy()
    for row in comps:
        if row[np.argmax(np.abs(row))] < 0:
            row *= -1
    return PcaModel(mean, comps, vals[:n_components] / vals.sum())


def pca_apply(model: PcaModel, X) -> np.ndarray:
    return model.transform(X)
