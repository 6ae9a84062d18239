import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from stocksim.errors import NotFittedError, RankDeficientError
from stocksim.segment import SaxCodec, paa, pca_apply, pca_fit, sax_encode, sax_word

series = arrays(np.float64, st.integers(1, 50), elements=st.floats(-100, 100))


def paa_upsampled(x, w):
    """Oracle: repeat every sample w times, then average n-sized blocks."""
    x = np.asarray(x, dtype=float)
    n = len(x)
    fine = np.repeat(x, w)
    return fine.reshape(w, n).mean(axis=1)


def test_paa_examples():
    np.testing.assert_allclose(paa([1, 2, 3, 4], 2), [1.5, 3.5])
    np.testing.assert_allclose(paa([1, 2, 3], 2), [4 / 3, 8 / 3])
    x = np.array([3.0, -1.0, 2.0])
    np.testing.assert_array_equal(paa(x, 3), x)


@pytest.mark.parametrize("w", [0, 5])
def test_paa_out_of_range(w):
    with pytest.raises(ValueError):
        paa([1, 2, 3, 4], w)


@given(series, st.data())
@settings(max_examples=100, deadline=None)
def test_paa_matches_upsampling_and_keeps_mean(x, data):
    w = data.draw(st.integers(1, len(x)))
    out = paa(x, w)
    np.testing.assert_allclose(out, paa_upsampled(x, w), atol=1e-9)
    assert out.mean() == pytest.approx(x.mean(), abs=1e-9)


def test_codec_breakpoints():
    c = SaxCodec.fit(4)
    np.testing.assert_allclose(c.breakpoints, [-0.6744897502, 0.0, 0.6744897502], atol=1e-9)
    assert np.all(np.diff(SaxCodec.fit(8).breakpoints) > 0)
    assert SaxCodec.fit(8).breakpoints[3] == 0.0


def test_sax_examples():
    assert sax_encode([-1, 1], SaxCodec.fit(2)).tolist() == [0, 1]
    assert SaxCodec.fit(2).render([0, 1]) == "ab"
    assert sax_encode(np.zeros(5), SaxCodec.fit(4)).tolist() == [2] * 5
    assert sax_encode([-0.7, -0.5, 0.5, 0.7], SaxCodec.fit(4)).tolist() == [0, 1, 2, 3]


def test_sax_symbol_counts_breakpoints_at_or_below():
    c = SaxCodec.fit(8)
    x = np.linspace(-3, 3, 101)
    expected = [(c.breakpoints <= v).sum() for v in x]
    assert sax_encode(x, c).tolist() == expected


def test_sax_unfitted():
    with pytest.raises(NotFittedError):
        sax_encode([0.0], SaxCodec(4))


def test_sax_word_length():
    x = np.random.default_rng(1).normal(size=64)
    assert len(sax_word(x, SaxCodec.fit(8), 16)) == 16


@given(series, st.integers(2, 12))
@settings(max_examples=80, deadline=None)
def test_sax_monotone(x, a):
    s = sax_encode(x, SaxCodec.fit(a))
    order = np.argsort(x, kind="stable")
    assert np.all(np.diff(s[order]) >= 0)
    assert s.min() >= 0 and s.max() < a
    assert len(s) == len(x)


# ------------------------------------------------------------- PCA


def test_pca_recovers_axes():
    rng = np.random.default_rng(0)
    z = rng.normal(size=(4000, 3))
    z = (z - z.mean(0)) / z.std(0)
    # decorrelate exactly so the covariance is diag(3, 2, 1)
    q, _ = np.linalg.qr(z)
    z = q * np.sqrt(len(z))
    z = z * np.sqrt([3.0, 2.0, 1.0])
    X = np.column_stack([z[:, 1], z[:, 2], z[:, 0]])
    m = pca_fit(X)
    np.testing.assert_allclose(np.abs(m.components), [[0, 0, 1], [1, 0, 0], [0, 1, 0]], atol=1e-6)
    np.testing.assert_allclose(m.explained, [0.5, 1 / 3, 1 / 6], atol=1e-6)
    assert np.all(m.components.max(axis=1) > 0)


def test_pca_mean_row_maps_to_origin():
    X = np.random.default_rng(2).normal(size=(50, 5))
    m = pca_fit(X)
    np.testing.assert_allclose(pca_apply(m, X.mean(axis=0, keepdims=True)), 0, atol=1e-12)


def test_pca_duplicate_rows_rank_error():
    X = np.tile([1.0, 2.0, 3.0, 4.0], (10, 1))
    with pytest.raises(RankDeficientError, match="rank 0"):
        pca_fit(X)


def test_pca_rank_two_error():
    rng = np.random.default_rng(3)
    base = rng.normal(size=(40, 2))
    X = np.column_stack([base, base.sum(axis=1), base[:, 0] - base[:, 1]])
    with pytest.raises(RankDeficientError, match="rank 2"):
        pca_fit(X)


def test_pca_too_small():
    with pytest.raises(RankDeficientError):
        pca_fit(np.ones((2, 5)))


@given(st.integers(0, 1000))
@settings(max_examples=20, deadline=None)
def test_pca_orthonormal_and_optimal(seed):
    rng = np.random.default_rng(seed)
    latent = rng.normal(size=(80, 3)) * [3, 2, 1]
    X = latent @ rng.normal(size=(3, 6)) + 0.05 * rng.normal(size=(80, 6))
    m = pca_fit(X)
    np.testing.assert_allclose(m.components @ m.components.T, np.eye(3), atol=1e-8)
    Xc = X - m.mean

    def recon_error(basis):
        return np.sum((Xc - Xc @ basis.T @ basis) ** 2)

    best = recon_error(m.components)
    for _ in range(10):
        q, _ = np.linalg.qr(rng.normal(size=(6, 3)))
        assert best <= recon_error(q.T) + 1e-9
