"""Regenerate cointegration_fixtures.json with statsmodels as the reference.

Run once: ``python tests/fixtures/make_cointegration_fixtures.py``. The
acceptance suite reads the archived JSON and does not need statsmodels.
"""

import json
from pathlib import Path

import numpy as np
from statsmodels.tsa.stattools import coint


def main():
    rng = np.random.default_rng(20240611)
    pairs = []
    for i in range(10):
        n = int(rng.integers(100, 501))
        a = np.cumsum(rng.normal(size=n))
        if i % 2 == 0:
            b = 2.0 * a + rng.normal(0.0, 0.5 + 0.5 * i, n)
            kind = "cointegrated"
        else:
            b = np.cumsum(rng.normal(size=n))
            kind = "independent"
        # candidate regressed on target, one lagged difference, constant trend term
        stat, pvalue, _ = coint(b, a, trend="c", maxlag=1, autolag=None)
        pairs.append({"kind": kind, "target": a.tolist(), "candidate": b.tolist(),
                      "stat": float(stat), "pvalue": float(pvalue)})
    out = Path(__file__).with_name("cointegration_fixtures.json")
    out.write_text(json.dumps({"reference": "statsmodels.tsa.stattools.coint",
                               "maxlag": 1, "pairs": pairs}))
    print(f"wrote {len(pairs)} pairs to {out}")


if __name__ == "__main__":
    main()
