import numpy as np
import pytest
from hypothesis import given, strategies as st

from rmtedge.ensembles import EnsembleKind, EnsembleSpec, MatrixSample, fast_equivalent_sample, sample_ensemble
from rmtedge.spectra import (Edge, NumericalError, edge_spectrum, hard_edge_points, soft_edge_points,
                             spectra_block, spectrum)


def _sample(kind, entries, nu=None):
    entries = np.asarray(entries)
    return MatrixSample(EnsembleSpec(EnsembleKind(kind), entries.shape[0], nu=nu), 0, entries)


def test_trivial_spectra():
    assert spectrum(_sample("GOE", [[0.7]])).tolist() == [0.7]
    np.testing.assert_allclose(spectrum(_sample("GOE", [[0.0, 1.0], [1.0, 0.0]])), [-1, 1], atol=1e-15)


def test_trace_identities_on_6x6():
    for idx in range(20):
        s = sample_ensemble(EnsembleSpec(EnsembleKind.GOE, 6), 17, idx)
        lam = spectrum(s)
        a = s.entries
        assert np.all(np.diff(lam) >= 0)
        assert abs(lam.sum() - np.trace(a)) <= 1e-10 * max(1.0, abs(np.trace(a)))
        assert abs((lam**2).sum() - np.sum(a * a)) <= 1e-10 * np.sum(a * a)


def test_wishart_spectrum_is_product_spectrum():
    s = sample_ensemble(EnsembleSpec(EnsembleKind.WISHART_COMPLEX, 4, nu=2), 3)
    np.testing.assert_allclose(spectrum(s), np.linalg.eigvalsh(s.product), rtol=1e-10, atol=1e-14)


def test_soft_edge_examples():
    sp = soft_edge_points([2.0], 1)
    assert sp.xi.tolist() == [0.0] and sp.edge is Edge.SOFT
    lam = np.array([0.0, 1.0, 1.5, 1.6, 1.7, 1.8, 1.9, 2.5])
    sp = soft_edge_points(lam, 8)
    assert sp.xi[0] == pytest.approx(2.0, rel=1e-12)
    assert np.all(np.diff(sp.xi) <= 0)


def test_hard_edge_examples():
    assert hard_edge_points([0.0], 1).xi.tolist() == [0.0]
    sp = hard_edge_points([0.25, 0.5, 0.75, 1.0], 4)
    assert sp.xi[0] == 4.0 and sp.edge is Edge.HARD


def test_hard_edge_clamps_roundoff_and_rejects_negatives():
    sp = hard_edge_points([-1e-9, 1.0], 2)
    assert sp.xi[0] == 0.0
    with pytest.raises(NumericalError):
        hard_edge_points([-1e-3, 1.0], 2)


def test_wrong_length_rejected():
    with pytest.raises(ValueError):
        soft_edge_points([1.0, 2.0], 3)


def test_rescaling_consistent_to_1e12():
    spec = EnsembleSpec(EnsembleKind.GUE, 10)
    lam = spectra_block(spec, 4, 0, 50)
    sp = edge_spectrum(spec, lam)
    np.testing.assert_allclose(sp.xi[..., ::-1], (lam - 2) * 10 ** (2 / 3), rtol=1e-12)
    hs = edge_spectrum(EnsembleSpec(EnsembleKind.WISHART_REAL, 10, nu=1),
                       spectra_block(EnsembleSpec(EnsembleKind.WISHART_REAL, 10, nu=1), 4, 0, 50))
    assert np.all(hs.xi >= -1e-6) and np.all(hs.eigenvalues >= -1e-10)


def test_small_singular_value_keeps_relative_accuracy():
    rng = np.random.default_rng(0)
    U, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    V, _ = np.linalg.qr(rng.standard_normal((3, 3)))
    s = np.array([1.0, 0.5, 1e-5])
    A = U @ np.diag(s) @ V.T
    sample = MatrixSample(EnsembleSpec(EnsembleKind.WISHART_REAL, 3, nu=0), 0, A)
    svd_path = spectrum(sample)
    direct = np.linalg.eigvalsh(A @ A.T)
    np.testing.assert_allclose(svd_path[1:], direct[1:], rtol=1e-8)
    assert svd_path[0] == pytest.approx(1e-10, rel=1e-8)
    smallest = []
    for _ in range(1000):
        E = 1e-15 * rng.standard_normal((3, 3))
        smallest.append(spectrum(MatrixSample(sample.spec, 0, A + E * np.abs(A)))[0])
    smallest = np.array(smallest)
    assert np.max(np.abs(smallest / 1e-10 - 1)) < 1e-6


def test_largest_soft_point_is_order_one():
    spec = EnsembleSpec(EnsembleKind.GOE, 64)
    lam = spectra_block(spec, 6, 0, 10_000, "banded")
    xi_max = soft_edge_points(lam, 64).xi[:, 0]
    assert abs(xi_max.mean()) < 5


def test_smallest_hard_point_is_order_one():
    spec = EnsembleSpec(EnsembleKind.WISHART_REAL, 64, nu=0)
    lam = spectra_block(spec, 6, 0, 10_000, "banded")
    med = np.median(hard_edge_points(lam, 64, 0).xi[:, 0])
    assert 0.01 < med < 10


def test_banded_spectrum_equals_dense_of_banded():
    m = fast_equivalent_sample(EnsembleSpec(EnsembleKind.GOE, 7), 2, 3)
    np.testing.assert_allclose(spectrum(m), np.linalg.eigvalsh(m.dense()), atol=1e-12)
    block = spectra_block(EnsembleSpec(EnsembleKind.GOE, 7), 2, 3, 4, "banded")
    np.testing.assert_allclose(block[0], spectrum(m), atol=1e-13)


def test_block_matches_single_samples():
    spec = EnsembleSpec(EnsembleKind.WISHART_REAL, 3, nu=2)
    block = spectra_block(spec, 10, 0, 4)
    for i in range(4):
        assert np.array_equal(block[i], spectrum(sample_ensemble(spec, 10, i)))


@given(st.lists(st.floats(-5, 5), min_size=1, max_size=8))
def test_rescaling_is_monotone(vals):
    lam = np.sort(np.array(vals))
    xi = soft_edge_points(lam, lam.size).xi
    assert np.all(np.diff(xi) <= 0)
    hard = hard_edge_points(np.abs(lam)[np.argsort(np.abs(lam))], lam.size).xi
    assert np.all(np.diff(hard) >= 0)
