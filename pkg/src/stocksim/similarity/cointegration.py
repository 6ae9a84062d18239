"""Engle-Granger two-step cointegration test.

Step one regresses the candidate on the target (with intercept). Step two
runs a Dickey-Fuller regression with one lagged difference and no
deterministic terms on the residuals. The t-statistic is turned into an
asymptotic p-value with MacKinnon's (1994) response surface for two I(1)
variables with a constant in the cointegrating regression.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np
from scipy.stats import norm

from stocksim.errors import DistanceError
from stocksim.similarity.align import AlignedPair

MIN_LENGTH = 30

# MacKinnon (1994), constant term, N = 2 series
_TAU_MAX = 0.92
_TAU_MIN = -18.86
_TAU_STAR = -2.62
_SMALL_P = (2.92, 1.5012, 0.039796)
_LARGE_P = (2.1945, 0.64695, -0.29198, -0.042377)

_COLLINEAR_R2 = 1.0 - 100.0 * np.sqrt(np.finfo(float).eps)


class CointegrationResult(NamedTuple):
    stat: float
    pvalue: float
    slope: float
    intercept: float


def mackinnon_pvalue(stat: float) -> float:
    if stat > _TAU_MAX:
        return 1.0
    if stat < _TAU_MIN:
        return 0.0
    coef = _SMALL_P if stat <= _TAU_STAR else _LARGE_P
    return float(norm.cdf(np.polynomial.polynomial.polyval(stat, coef)))


def _ols(X: np.ndarray, y: np.ndarray):
    beta, _, rank, _ = np.linalg.lstsq(X, y, rcond=None)
    if rank < X.shape[1]:
        raise DistanceError("singular regression")
    resid = y - X @ beta
    return beta, resid


def adf_stat(resid: np.ndarray) -> float:
    """Dickey-Fuller t-statistic with one lagged difference, no constant."""
    e = np.asarray(resid, dtype=float)
    de = np.diff(e)
    y = de[1:]
    X = np.column_stack([e[1:-1], de[:-1]])
    beta, u = _ols(X, y)
    dof = len(y) - X.shape[1]
    sigma2 = float(u @ u) / dof
    cov = sigma2 * np.linalg.inv(X.T @ X)
    return float(beta[0] / np.sqrt(cov[0, 0]))


def engle_granger(target, candidate) -> CointegrationResult:
    a = np.asarray(target, dtype=float)
    b = np.asarray(candidate, dtype=float)
    if len(a) != len(b):
        raise DistanceError("series lengths differ")
    if len(a) < MIN_LENGTH:
        raise DistanceError(f"cointegration needs {MIN_LENGTH} points, got {len(a)}")
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise DistanceError("singular regression: constant series")
    X = np.column_stack([a, np.ones_like(a)])
    beta, resid = _ols(X, b)
    tss = float(((b - b.mean()) ** 2).sum())
    r2 = 1.0 - float(resid @ resid) / tss
    if r2 >= _COLLINEAR_R2:
        raise DistanceError("singular regression: series are exactly collinear")
    stat = adf_stat(resid)
    return CointegrationResult(stat, mackinnon_pvalue(stat), float(beta[0]), float(beta[1]))


def dist_cointegration(p: AlignedPair) -> float:
    """Engle-Granger p-value (candidate ``b`` regressed on target ``a``)."""
    return engle_granger(p.a, p.b).pvalue
