"""Length fixers: bring two dated value series onto a common, equal-length axis."""

from __future__ import annotations

import math
from typing import NamedTuple

import numpy as np

from stocksim.errors import AlignmentError


class TimeValues(NamedTuple):
    dates: np.ndarray
    values: np.ndarray


class AlignedPair(NamedTuple):
    dates: np.ndarray
    a: np.ndarray
    b: np.ndarray

    def __len__(self) -> int:
        return len(self.dates)


def _tv(x) -> TimeValues:
    return TimeValues(np.asarray(x[0], dtype="datetime64[D]"), np.asarray(x[1], dtype=float))


def _checked(dates, a, b) -> AlignedPair:
    if len(dates) < 2:
        raise AlignmentError(f"only {len(dates)} aligned points")
    return AlignedPair(dates, a, b)


def time_join(x, y) -> AlignedPair:
    """Inner join on dates."""
    x, y = _tv(x), _tv(y)
    if len(x.dates) == 0 or len(y.dates) == 0:
        raise AlignmentError("empty series")
    shared, ix, iy = np.intersect1d(x.dates, y.dates, assume_unique=True, return_indices=True)
    return _checked(shared, x.values[ix], y.values[iy])


def delayed_time_join(x, y, t: int = 1) -> AlignedPair:
    """Pair ``y``'s value ``t`` observations later with each date of ``x``.

    ``y`` is shifted back by ``t`` points before the inner join, so a small
    distance means ``y`` repeats what ``x`` did ``t`` points earlier.
    """
    if t < 1:
        raise ValueError("delay must be >= 1")
    y = _tv(y)
    if len(y.dates) <= t:
        raise AlignmentError("series shorter than delay")
    shifted = TimeValues(y.dates[:-t], y.values[t:])
    return time_join(x, shifted)


def pad_align(x, y) -> AlignedPair:
    """Front-pad the shorter series with its first value; pair by position
    from the end. Dates follow the longer series."""
    x, y = _tv(x), _tv(y)
    if len(x.values) == 0 or len(y.values) == 0:
        raise AlignmentError("empty series")
    n = max(len(x.values), len(y.values))

    def pad(v):
        return np.concatenate([np.full(n - len(v), v[0]), v])

    dates = x.dates if len(x.dates) >= len(y.dates) else y.dates
    return _checked(dates, pad(x.values), pad(y.values))


def _chord_distance(v: np.ndarray, left: int, right: int) -> np.ndarray:
    """Vertical distance of points strictly between two anchors to their chord."""
    k = np.arange(left + 1, right)
    span = right - left
    return np.abs((v[k] - v[left]) * span - (v[right] - v[left]) * (k - left)) / span


def pip_select(series, m: int) -> np.ndarray:
    """Indices of ``m`` perceptually important points, ascending.

    Starts from both endpoints and repeatedly adds the point farthest
    (vertically) from the chord joining its two neighbouring PIPs. Ties go to
    the earliest index.
    """
    v = np.asarray(series, dtype=float)
    n = len(v)
    if not 2 <= m <= n:
        raise ValueError(f"PIP count {m} outside [2, {n}]")
    dist = np.full(n, -1.0)
    dist[1:-1] = _chord_distance(v, 0, n - 1)
    selected = [0, n - 1]
    for _ in range(m - 2):
        k = int(np.argmax(dist))
        pos = np.searchsorted(selected, k)
        left, right = selected[pos - 1], selected[pos]
        selected.insert(pos, k)
        dist[k] = -1.0
        dist[left + 1:k] = _chord_distance(v, left, k)
        dist[k + 1:right] = _chord_distance(v, k, right)
    return np.asarray(selected)


def _locf(x: TimeValues, dates: np.ndarray) -> np.ndarray:
    # dates before the first observation take the first value
    pos = np.searchsorted(x.dates, dates, side="right") - 1
    return x.values[np.clip(pos, 0, None)]


def pip_align(x, y, fraction: float = 0.10) -> AlignedPair:
    """Union of both series' PIP dates, each side sampled there with
    last-observation-carried-forward."""
    if not 0 < fraction <= 1:
        raise ValueError("PIP fraction must be in (0, 1]")
    x, y = _tv(x), _tv(y)
    for s in (x, y):
        if len(s.values) < 20:
            raise AlignmentError(f"PIP alignment needs 20 points, got {len(s.values)}")
    px = pip_select(x.values, max(2, math.ceil(fraction * len(x.values))))
    py = pip_select(y.values, max(2, math.ceil(fraction * len(y.values))))
    dates = np.union1d(x.dates[px], y.dates[py])
    return _checked(dates, _locf(x, dates), _locf(y, dates))


FIXERS = ("time_join", "delayed_time_join", "padding", "pip")


def align(x, y, fixer: str, delay: int = 1, pip_fraction: float = 0.10) -> AlignedPair:
    if fixer == "time_join":
        return time_join(x, y)
    if fixer == "delayed_time_join":
        return delayed_time_join(x, y, delay)
    if fixer == "padding":
        return pad_align(x, y)
    if fixer == "pip":
        return pip_align(x, y, pip_fraction)
    raise ValueError(f"unknown fixer {fixer!r}")
