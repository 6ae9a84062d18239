import numpy as np
import pytest
from conftest import make_series, random_walk
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stocksim.errors import ConfigError, DataError, InsufficientDataError, NotFittedError
from stocksim.market_data import partition_folds
from stocksim.preprocess import (
    DECREASE,
    INCREASE,
    MULTIVARIATE_FEATURES,
    Normalizer,
    ProcessingConfig,
    apply_normalizer,
    build_instances,
    build_targets,
    ema,
    fit_normalizer,
    macd,
    parse_temporal,
    proc,
    rsi,
)

prices = arrays(np.float64, st.integers(3, 60), elements=st.floats(1.0, 1000.0))


# ------------------------------------------------------------- normalizer


def test_normalizer_hand_values():
    n = fit_normalizer([1.0, 2.0, 3.0])
    np.testing.assert_allclose(apply_normalizer(n, [1, 2, 3]), [-1.224744871, 0, 1.224744871], atol=1e-8)
    assert apply_normalizer(n, [4.0])[0] == pytest.approx(2.449489743, abs=1e-8)


def test_normalizer_constant_column_gives_zeros():
    n = fit_normalizer([5.0, 5.0, 5.0])
    assert apply_normalizer(n, [5.0, 7.0]).tolist() == [0.0, 0.0]


def test_unfitted_normalizer():
    with pytest.raises(NotFittedError):
        apply_normalizer(Normalizer(), [1.0])
    with pytest.raises(NotFittedError):
        Normalizer().invert([1.0])


def test_normalizer_fit_on_empty():
    with pytest.raises(InsufficientDataError):
        fit_normalizer([])


@given(arrays(np.float64, st.integers(2, 40), elements=st.floats(-1e3, 1e3)))
@settings(max_examples=60, deadline=None)
def test_normalizer_invert_round_trip(x):
    n = fit_normalizer(x)
    if n.std > 0:
        np.testing.assert_allclose(n.invert(n.apply(x)), x, atol=1e-8 * (1 + np.abs(x).max()))
    assert n.std >= 0


# ------------------------------------------------------------- indicators


def test_proc_examples():
    np.testing.assert_allclose(proc([100, 110]), [0.10])
    assert proc([50, 50, 50]).tolist() == [0.0, 0.0]
    np.testing.assert_allclose(proc([100, 90, 99]), [-0.10, 0.10])


def test_proc_errors():
    with pytest.raises(DataError):
        proc([1.0, 0.0, 2.0])
    with pytest.raises(InsufficientDataError):
        proc([1.0], 1)


@given(prices, st.integers(1, 5))
@settings(max_examples=60, deadline=None)
def test_proc_inverse(c, span):
    if len(c) <= span:
        return
    p = proc(c, span)
    assert len(p) == len(c) - span
    np.testing.assert_allclose(c[:-span] * (1 + p), c[span:], rtol=1e-12)


def test_rsi_monotone_series():
    assert np.all(rsi(np.arange(1.0, 40.0)) == 100.0)
    assert np.all(rsi(np.arange(40.0, 1.0, -1)) == 0.0)


def test_rsi_alternating_is_50():
    c = 100 + np.tile([0.0, 1.0], 20)
    np.testing.assert_allclose(rsi(c, 14), 50.0)


def test_rsi_hand_computed_window():
    c = np.array([10, 11, 10.5, 11.5, 12.0])
    # changes +1, -0.5, +1, +0.5 over period 4: gain 2.5/4, loss 0.5/4
    assert rsi(c, 4)[0] == pytest.approx(100 - 100 / (1 + 2.5 / 0.5))


@given(prices)
@settings(max_examples=40, deadline=None)
def test_rsi_bounds(c):
    if len(c) <= 14:
        return
    r = rsi(c)
    assert np.all((r >= 0) & (r <= 100))


def test_macd_constant_is_zero():
    line, sig, hist = macd(np.full(40, 7.0))
    assert np.allclose(line, 0) and np.allclose(sig, 0) and np.allclose(hist, 0)


def test_macd_ramp_converges_to_lag_difference():
    # a linear ramp is lagged by (span - 1) / 2 points by an EMA, so
    # macd -> (26 - 1)/2 - (12 - 1)/2 = 7 times the slope
    t = np.arange(600.0)
    line, _, hist = macd(t)
    assert line[-1] == pytest.approx(7.0, rel=1e-6)
    assert abs(hist[-1]) < 1e-6


def test_macd_equal_spans_rejected():
    with pytest.raises(ValueError):
        macd(np.arange(40.0), 12, 12)


def test_ema_recursion_oracle():
    x = np.random.default_rng(0).normal(size=50)
    a = 2 / 11
    ref = [x[0]]
    for v in x[1:]:
        ref.append(a * v + (1 - a) * ref[-1])
    np.testing.assert_allclose(ema(x, 10), ref, rtol=1e-12)


# ------------------------------------------------------------- targets


def test_targets_up_move():
    s = make_series("A", [100, 103])
    v, c = build_targets(s, ProcessingConfig(predict_value="proc", horizon=1))
    assert v[0] == pytest.approx(0.03)
    assert c[0] == INCREASE


def test_targets_flat_is_decrease():
    v, c = build_targets(make_series("A", [100, 100]), ProcessingConfig())
    assert c[0] == DECREASE


def test_targets_next_week_count():
    v, c = build_targets(make_series("A", np.arange(1, 11)), ProcessingConfig(horizon=5))
    assert len(v) == len(c) == 5


def test_targets_close_value():
    v, _ = build_targets(make_series("A", [100, 101, 102]), ProcessingConfig(predict_value="close"))
    assert v.tolist() == [101, 102]


def test_targets_too_short():
    with pytest.raises(InsufficientDataError):
        build_targets(make_series("A", [1, 2]), ProcessingConfig(horizon=2))


# ------------------------------------------------------------- config


def test_window_needs_univariate():
    with pytest.raises(ConfigError):
        ProcessingConfig(feature_mode="multivariate", window=5)


def test_temporal_tokens():
    assert parse_temporal("timepoint") is None
    assert parse_temporal("window10") == 10
    assert ProcessingConfig(window=5).temporal == "window5"
    with pytest.raises(ConfigError):
        parse_temporal("windows")


@pytest.mark.parametrize("kw", [dict(feature_mode="x"), dict(transform="fft"),
                                dict(predict_value="open"), dict(horizon=0), dict(window=0)])
def test_bad_configs(kw):
    with pytest.raises(ConfigError):
        ProcessingConfig(**kw)


# ------------------------------------------------------------- instances


def _pair(rng, n=240, offset=0):
    a = make_series("TGT", random_walk(rng, n))
    b = make_series("PEER", random_walk(rng, n))
    return a, b


def _ranges(s, n_folds=2, fold=2):
    p = partition_folds(s, n_folds)[fold - 1]
    return p.train_range, p.test_range, p


@pytest.mark.parametrize("w,h", [(5, 1), (5, 3), (10, 5)])
def test_window_train_count_with_one_peer(rng, w, h):
    a, b = _pair(rng)
    train_rng, test_rng, plan = _ranges(a)
    cfg = ProcessingConfig("univariate", "raw", w, "proc", h)
    train, test, _ = build_instances(a, [b], cfg, train_rng, test_rng)
    L = plan.train_slice.stop - plan.train_slice.start
    assert len(train) == 2 * (L - w - h + 1)
    # enumerate the admissible as-of indices directly
    lo, hi = plan.train_slice.start, plan.train_slice.stop
    expected = [t for t in range(lo, hi) if t - w + 1 >= lo and t + h < hi]
    own = train.as_of[train.source == "TGT"]
    assert list(own) == list(a.dates[expected])


def test_window_test_rows_come_from_target_only(rng):
    a = make_series("TGT", random_walk(rng, 240))
    peers = [make_series(f"P{i:02d}", random_walk(rng, 240)) for i in range(50)]
    train_rng, test_rng, plan = _ranges(a)
    train, test, _ = build_instances(a, peers, ProcessingConfig(window=10, transform="sax"),
                                     train_rng, test_rng)
    assert set(test.source) == {"TGT"}
    assert len(test) == plan.test_slice.stop - plan.test_slice.start
    assert len(set(train.source)) == 51


def test_window_peer_weights(rng):
    a, b = _pair(rng)
    train_rng, test_rng, _ = _ranges(a)
    train, _, _ = build_instances(a, [b], ProcessingConfig(window=5), train_rng, test_rng,
                                  weights={"PEER": 0.25})
    assert set(train.weight[train.source == "PEER"]) == {0.25}
    assert set(train.weight[train.source == "TGT"]) == {1.0}


def test_timepoint_inner_join(rng):
    base = np.datetime64("2020-01-01")
    a = make_series("TGT", [10, 11, 12, 13, 14], dates=base + np.array([0, 1, 2, 3, 4]))
    b = make_series("PEER", [20, 21, 22, 23, 24], dates=base + np.array([0, 2, 3, 5, 6]))
    cfg = ProcessingConfig("univariate", "raw", None, "close", 1)
    train, _, _ = build_instances(a, [b], cfg, (a.dates[0], a.dates[-1]), (a.dates[-1], a.dates[-1]))
    # shared dates d0, d2, d3 (each has a next-day target inside the range)
    assert list(train.as_of) == [a.dates[0], a.dates[2], a.dates[3]]
    assert train.X.shape[1] == 2
    assert train.feature_names == ("close", "peer_PEER")


def test_timepoint_join_example():
    base = np.datetime64("2020-01-01")
    a = make_series("TGT", [10, 11, 12, 13], dates=base + np.array([1, 2, 3, 9]))
    b = make_series("PEER", [20, 21, 22, 23], dates=base + np.array([2, 3, 4, 10]))
    cfg = ProcessingConfig("univariate", "raw", None, "close", 1)
    train, _, _ = build_instances(a, [b], cfg, (a.dates[0], a.dates[-1]), (a.dates[-1], a.dates[-1]))
    assert set(train.as_of) == {base + 2, base + 3}


def test_multivariate_features_and_scaling(rng):
    a = make_series("TGT", random_walk(rng, 200))
    train_rng, test_rng, _ = _ranges(a)
    cfg = ProcessingConfig("multivariate", "raw", None, "proc", 1)
    train, test, fitted = build_instances(a, [], cfg, train_rng, test_rng)
    assert train.feature_names == MULTIVARIATE_FEATURES
    assert np.isfinite(train.X).all() and np.isfinite(test.X).all()
    close = train.X[:, MULTIVARIATE_FEATURES.index("close")]
    # close is z-normalized on train rows; RSI is left as is
    assert abs(close.mean()) < 0.2
    rsi_col = train.X[:, MULTIVARIATE_FEATURES.index("rsi")]
    assert rsi_col.min() >= 0 and rsi_col.max() <= 100 and rsi_col.max() > 5


def test_multivariate_pca_three_columns(rng):
    a = make_series("TGT", random_walk(rng, 200))
    train_rng, test_rng, _ = _ranges(a)
    train, test, fitted = build_instances(a, [], ProcessingConfig("multivariate", "pca"), train_rng, test_rng)
    assert train.X.shape[1] == 3 and test.X.shape[1] == 3
    assert fitted.pca is not None


def test_sax_features_are_symbols(rng):
    a, b = _pair(rng)
    train_rng, test_rng, _ = _ranges(a)
    train, test, fitted = build_instances(a, [b], ProcessingConfig(transform="sax"), train_rng, test_rng)
    vals = np.unique(np.concatenate([train.X.ravel(), test.X.ravel()]))
    assert set(vals) <= set(range(fitted.codec.alphabet_size))


def test_instance_labels_match_raw_closes(rng):
    a, b = _pair(rng)
    train_rng, test_rng, _ = _ranges(a)
    for h in (1, 3, 5):
        train, test, _ = build_instances(a, [b], ProcessingConfig(window=5, horizon=h), train_rng, test_rng)
        for m in (train, test):
            for src, d, cls in zip(m.source, m.as_of, m.target_class):
                s = a if src == "TGT" else b
                i = int(np.searchsorted(s.dates, d))
                assert cls == (INCREASE if s.close[i + h] > s.close[i] else DECREASE)


def test_close_target_normalized_with_train_stats(rng):
    a = make_series("TGT", random_walk(rng, 200))
    train_rng, test_rng, plan = _ranges(a)
    cfg = ProcessingConfig("univariate", "raw", None, "close", 1)
    train, _, fitted = build_instances(a, [], cfg, train_rng, test_rng)
    tn = fitted.target_normalizers["TGT"]
    seg = a.close[plan.train_slice]
    assert tn.mean == pytest.approx(seg.mean()) and tn.std == pytest.approx(seg.std())
    i = int(np.searchsorted(a.dates, train.as_of[0]))
    assert tn.invert(train.target_value[0]) == pytest.approx(a.close[i + 1])


def test_normalizer_uses_train_range_only(rng):
    a = make_series("TGT", random_walk(rng, 200))
    train_rng, test_rng, plan = _ranges(a)
    cfg = ProcessingConfig("univariate", "raw", None, "close", 1)
    _, test1, f1 = build_instances(a, [], cfg, train_rng, test_rng)
    # fitting on train and test together must give different outputs
    wide = (train_rng[0], test_rng[1])
    _, test2, f2 = build_instances(a, [], cfg, wide, test_rng)
    assert f1.normalizers["TGT"].mean != f2.normalizers["TGT"].mean
    assert not np.allclose(test1.X, test2.X)
    assert f1.normalizers["TGT"].mean == pytest.approx(a.close[plan.train_slice].mean())


def test_window_longer_than_train_range(rng):
    a = make_series("TGT", random_walk(rng, 30))
    train_rng, test_rng, _ = _ranges(a, 2, 1)
    with pytest.raises(InsufficientDataError):
        build_instances(a, [], ProcessingConfig(window=20), train_rng, test_rng)


def test_empty_train_after_join(rng):
    a = make_series("TGT", random_walk(rng, 40))
    b = make_series("PEER", random_walk(rng, 40), start="2021-01-01")
    train_rng, test_rng, _ = _ranges(a)
    with pytest.raises(InsufficientDataError):
        build_instances(a, [b], ProcessingConfig(transform="raw"), train_rng, test_rng)


def test_peer_order_does_not_matter(rng):
    a = make_series("TGT", random_walk(rng, 200))
    peers = [make_series(f"P{i}", random_walk(rng, 200)) for i in range(4)]
    train_rng, test_rng, _ = _ranges(a)
    for cfg in (ProcessingConfig(window=5), ProcessingConfig(transform="raw")):
        t1, _, _ = build_instances(a, peers, cfg, train_rng, test_rng)
        t2, _, _ = build_instances(a, peers[::-1], cfg, train_rng, test_rng)
        np.testing.assert_array_equal(t1.X, t2.X)


def test_feature_matrix_indexing(rng):
    a = make_series("TGT", random_walk(rng, 100))
    train_rng, test_rng, _ = _ranges(a)
    train, _, _ = build_instances(a, [], ProcessingConfig(window=5), train_rng, test_rng)
    inst = train[3]
    assert inst.source_symbol == "TGT"
    assert inst.features.shape == (5,)
    assert np.isfinite(inst.features).all()
