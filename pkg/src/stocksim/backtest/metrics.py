"""Classification and trading metrics for one evaluated fold."""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from stocksim.errors import InsufficientDataError
from stocksim.preprocess import DECREASE, INCREASE


def evaluate_classification(predictions, truths) -> tuple[float, float]:
    """Accuracy and macro-F1 over {increase, decrease}.

    A class that never appears in either input scores F1 = 0.
    """
    p = np.asarray(predictions)
    t = np.asarray(truths)
    if p.shape != t.shape:
        raise ValueError("predictions and truths differ in length")
    if p.size == 0:
        raise InsufficientDataError("nothing to evaluate")
    acc = float(np.mean(p == t))
    f1s = []
    for c in (INCREASE, DECREASE):
        tp = np.sum((p == c) & (t == c))
        denom = np.sum(p == c) + np.sum(t == c)
        f1s.append(2.0 * tp / denom if denom else 0.0)
    return acc, float(np.mean(f1s))


@dataclass(frozen=True)
class TradeLog:
    dates: np.ndarray
    position: np.ndarray
    returns: np.ndarray
    prediction: np.ndarray
    truth: np.ndarray

    def __len__(self) -> int:
        return len(self.returns)


def buy_and_hold(predictions, closes, horizon: int, dates=None, truths=None):
    """Long on a predicted increase, short otherwise, held for ``horizon`` bars.

    ``closes`` must hold the entry price at position ``t`` for every
    prediction ``t`` plus ``horizon`` further prices. Profit is 100 times
    the plain sum of per-trade returns (one unit per trade, no compounding).

    Returns ``(profit, TradeLog)``.
    """
    pred = np.asarray(predictions)
    c = np.asarray(closes, dtype=float)
    n = len(pred)
    if len(c) < n + horizon:
        raise InsufficientDataError(
            f"need {n + horizon} closes for {n} trades at horizon {horizon}, got {len(c)}"
        )
    entry, exit_ = c[:n], c[horizon:horizon + n]
    position = np.where(pred == INCREASE, 1, -1)
    rets = position * (exit_ - entry) / entry
    realized = np.where(exit_ > entry, INCREASE, DECREASE)
    log = TradeLog(
        np.arange(n) if dates is None else np.asarray(dates),
        position,
        rets,
        pred,
        realized if truths is None else np.asarray(truths),
    )
    return 100.0 * float(rets.sum()), log


def trade_returns(predictions, entry_close, exit_close) -> np.ndarray:
    """Per-trade returns for explicitly paired entry/exit prices."""
    entry = np.asarray(entry_close, dtype=float)
    exit_ = np.asarray(exit_close, dtype=float)
    position = np.where(np.asarray(predictions) == INCREASE, 1, -1)
    return position * (exit_ - entry) / entry


class Sharpe(NamedTuple):
    value: float
    degenerate: bool


def sharpe_ratio(returns) -> Sharpe:
    r = np.asarray(returns, dtype=float)
    if len(r) < 2:
        raise InsufficientDataError("Sharpe ratio needs at least 2 returns")
    sd = r.std()
    if sd == 0:
        return Sharpe(0.0, True)
    return Sharpe(float(r.mean() / sd), False)
