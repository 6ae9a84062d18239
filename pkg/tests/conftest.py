import numpy as np
import pytest

from stocksim.market_data import StockSeries, Universe


def make_series(symbol, closes, start="2020-01-01", dates=None, volume=1000.0):
    """Bars built around a close path: open = previous close, high/low pad 1%."""
    c = np.asarray(closes, dtype=float)
    if dates is None:
        dates = np.datetime64(start, "D") + np.arange(len(c))
    o = np.concatenate([[c[0]], c[:-1]])
    return StockSeries(
        symbol,
        dates,
        o,
        np.maximum(o, c) * 1.01,
        np.minimum(o, c) * 0.99,
        c,
        np.full(len(c), volume),
    )


def random_walk(rng, n, start=100.0, vol=0.01):
    return start * np.exp(np.cumsum(rng.normal(0.0, vol, n)))


def make_universe(series, targets=()):
    return Universe({s.symbol: s for s in series}, tuple(targets))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# ------------------------------------------------------------- acceptance report

_CRITERIA: dict[int, tuple[bool, str]] = {}


@pytest.fixture
def criterion():
    """``criterion(n, ok, detail)`` records one acceptance verdict, prints it
    and fails the test when ``ok`` is false."""

    def record(n: int, ok: bool, detail: str):
        ok = bool(ok)
        _CRITERIA[n] = (ok, detail)
        print(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
        assert ok, f"criterion {n} failed: {detail}"

    return record


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for n in sorted(_CRITERIA):
        ok, detail = _CRITERIA[n]
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'} - {detail}")
