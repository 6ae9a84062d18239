"""Pairwise distances between aligned series."""

from __future__ import annotations

import math

import numba
import numpy as np

from stocksim.errors import DistanceError
from stocksim.segment import SaxCodec
from stocksim.similarity.align import AlignedPair


def dist_euclidean(p: AlignedPair) -> float:
    d = np.asarray(p.a, dtype=float) - np.asarray(p.b, dtype=float)
    return float(np.sqrt(np.dot(d, d)))


def dist_pearson(p: AlignedPair) -> float:
    """``1 - r``: 0 for perfectly co-moving series, 2 for mirror images."""
    a = np.asarray(p.a, dtype=float)
    b = np.asarray(p.b, dtype=float)
    da, db = a - a.mean(), b - b.mean()
    sa, sb = np.sqrt(np.dot(da, da)), np.sqrt(np.dot(db, db))
    if sa == 0 or sb == 0:
        raise DistanceError("Pearson distance undefined for a constant series")
    r = float(np.dot(da, db) / (sa * sb))
    return 1.0 - min(1.0, max(-1.0, r))


@numba.njit(cache=True)
def _dtw(a, b):
    n, m = a.shape[0], b.shape[0]
    prev = np.full(m + 1, np.inf)
    cur = np.empty(m + 1)
    prev[0] = 0.0
    for i in range(1, n + 1):
        cur[0] = np.inf
        ai = a[i - 1]
        for j in range(1, m + 1):
            best = prev[j - 1]
            if prev[j] < best:
                best = prev[j]
            if cur[j - 1] < best:
                best = cur[j - 1]
            cur[j] = abs(ai - b[j - 1]) + best
        prev, cur = cur, prev
    return prev[m]


def dtw_distance(a, b) -> float:
    """Unconstrained DTW with absolute-difference local cost.

    Both ends are anchored: the path starts at the first pair and ends at the
    last pair. Inputs may differ in length.
    """
    a = np.ascontiguousarray(a, dtype=np.float64)
    b = np.ascontiguousarray(b, dtype=np.float64)
    if a.size == 0 or b.size == 0:
        raise DistanceError("DTW of an empty series")
    return float(_dtw(a, b))


def dist_dtw(p: AlignedPair) -> float:
    return dtw_distance(p.a, p.b)


def mindist_table(codec: SaxCodec) -> np.ndarray:
    """Symbol-pair lookup: 0 for equal or neighbouring symbols, otherwise the
    gap between the breakpoints that separate them."""
    a = codec.alphabet_size
    bp = codec.breakpoints
    r, c = np.meshgrid(np.arange(a), np.arange(a), indexing="ij")
    hi, lo = np.maximum(r, c), np.minimum(r, c)
    table = np.zeros((a, a))
    far = (hi - lo) > 1
    table[far] = bp[hi[far] - 1] - bp[lo[far]]
    return table


def dist_mindist(g, h, codec: SaxCodec, n: int) -> float:
    """MINDIST between two SAX words of equal length ``w`` built from
    series of original length ``n``."""
    g = np.asarray(g, dtype=np.int64)
    h = np.asarray(h, dtype=np.int64)
    if g.shape != h.shape:
        raise DistanceError("SAX words differ in length")
    a = codec.alphabet_size
    if g.size and (g.min() < 0 or h.min() < 0 or g.max() >= a or h.max() >= a):
        raise DistanceError(f"symbol outside alphabet of size {a}")
    w = len(g)
    cells = mindist_table(codec)[g, h]
    return math.sqrt(n / w) * float(np.sqrt(np.dot(cells, cells)))
