import numpy as np
import pytest
from scipy import integrate, stats

from rmtedge.ensembles import ConfigurationError, EnsembleKind, EnsembleSpec
from rmtedge.recursions import (TheoremId, admit_derived, n1_expectation, n1_moment, residual_observable,
                                residual_terms, scaling_study, verify, verify_cells)
from rmtedge.spectra import edge_spectrum, spectra_block
from rmtedge.statistics import DomainError, EvaluationPoint, MultiIndex

E1, E2, E3 = MultiIndex.of(1), MultiIndex.of(0, 1), MultiIndex.of(0, 0, 1)
HARD = EvaluationPoint.hard(1.0)
SOFT = EvaluationPoint.soft(1j)


@pytest.mark.parametrize("K", [E1, E2, E3, MultiIndex.of(2), MultiIndex.of(1, 1), MultiIndex.of(1, 0, 2)])
def test_wishart_real_term_count(K):
    d = len(K.nonzero())
    assert len(residual_terms(TheoremId.WISHART_REAL, K, HARD, 4, 1)) == 4 + 2 * d
    assert len(residual_terms(TheoremId.WISHART_COMPLEX, K, HARD, 4, 1)) == 3 + 2 * d


def test_zero_components_never_shift():
    # K = e2: no l = 1 term may appear, so no index loses a first component
    terms = residual_terms(TheoremId.WISHART_REAL, E2, HARD, 4, 1)
    shifted = {MultiIndex.of(0, 0, 0, 1), MultiIndex.of(0, 0, 1)}
    assert shifted <= {t.index for t in terms}
    assert all(t.index[2] >= 0 for t in terms)
    goe = residual_terms(TheoremId.GOE_GENERAL, E2, SOFT, 8)
    assert MultiIndex.of(0, 0, 0, 1) in {t.index for t in goe}
    assert MultiIndex.of(0, 0, 1) not in {t.index for t in goe}


def test_precondition_errors():
    with pytest.raises(DomainError):
        residual_terms(TheoremId.WISHART_REAL, MultiIndex(), HARD, 4, 1)
    with pytest.raises(DomainError):
        residual_terms(TheoremId.WISHART_REAL_BOUNDARY, E1, HARD, 4, 1)
    with pytest.raises(DomainError):
        residual_terms(TheoremId.GOE_GENERAL, E1, HARD, 4)
    with pytest.raises(ConfigurationError):
        residual_terms(TheoremId.WISHART_REAL, E1, HARD, 4, 1, form="other")
    with pytest.raises(ConfigurationError):
        verify(TheoremId.GOE_GENERAL, E1, EnsembleSpec(EnsembleKind.GUE, 4), SOFT, 1000, 0)
    with pytest.raises(ConfigurationError):
        verify(TheoremId.GOE_GENERAL, E1, EnsembleSpec(EnsembleKind.GOE, 4), SOFT, 10, 0)


def test_residual_observable_is_batched():
    spec = EnsembleSpec(EnsembleKind.WISHART_COMPLEX, 3, nu=1)
    sp = edge_spectrum(spec, spectra_block(spec, 0, 0, 7))
    r = residual_observable(TheoremId.WISHART_COMPLEX, E1, sp, HARD, spec)
    assert np.shape(r) == (7,)
    with pytest.raises(ConfigurationError):
        residual_observable(TheoremId.WISHART_REAL, E1, sp, HARD, spec)


WISHART_IDS = [TheoremId.WISHART_REAL, TheoremId.WISHART_COMPLEX]


@pytest.mark.parametrize("theorem", WISHART_IDS)
@pytest.mark.parametrize("nu", [0, 1, 3])
@pytest.mark.parametrize("t", [0.5, 1.0, 2.0])
def test_n1_quadrature_grid(theorem, nu, t):
    point = EvaluationPoint.hard(t)
    for K in (E1, E2, MultiIndex.of(2), MultiIndex.of(1, 1), E3):
        assert abs(n1_expectation(theorem, K, point, nu)) <= 1e-6
    boundary = TheoremId(theorem.value + "_boundary")
    assert abs(n1_expectation(boundary, MultiIndex(), point, nu)) <= 1e-6


@pytest.mark.parametrize("z", [1j, 1 + 1j])
def test_n1_quadrature_soft(z):
    point = EvaluationPoint.soft(z)
    assert abs(n1_expectation(TheoremId.GOE_BOUNDARY_EXACT, MultiIndex(), point)) <= 1e-8
    assert abs(n1_expectation(TheoremId.GUE_BOUNDARY_EXACT, MultiIndex(), point)) <= 1e-8
    for K in (E1, E2, MultiIndex.of(1, 1)):
        assert abs(n1_expectation(TheoremId.GOE_GENERAL_EXACT, K, point)) <= 1e-8
        assert abs(n1_expectation(TheoremId.GUE_GENERAL_EXACT, K, point)) <= 1e-8


def test_derived_identities_are_admitted():
    for th in (TheoremId.GOE_GENERAL_EXACT, TheoremId.GUE_GENERAL_EXACT, TheoremId.GUE_BOUNDARY_EXACT):
        assert admit_derived(th)


def test_leading_identity_is_not_exact_at_n1():
    assert abs(n1_expectation(TheoremId.GOE_GENERAL, E1, SOFT)) > 1e-3


def test_printed_coefficients_at_n1():
    for nu in (1, 3):
        assert abs(n1_expectation(TheoremId.WISHART_REAL, E1, EvaluationPoint.hard(0.5), nu,
                                  form="printed")) > 1e-3
        assert abs(n1_expectation(TheoremId.WISHART_REAL, E1, HARD, nu, form="printed")) <= 1e-8
    # nu = 0: printed lead (-1/t^2 + 1) equals the derived one
    assert abs(n1_expectation(TheoremId.WISHART_REAL, E1, EvaluationPoint.hard(0.5), 0,
                              form="printed")) <= 1e-8


def test_n1_moment_against_scipy_density():
    # chi-square(1), t = 1: E (lam + 1)^-2
    ref, _ = integrate.quad(lambda x: stats.chi2.pdf(x, 1) / (x + 1) ** 2, 0, np.inf, limit=200)
    assert n1_moment(EnsembleKind.WISHART_REAL, E2, HARD) == pytest.approx(ref, abs=1e-8)
    # exponential: E (lam+1)^-1 + E (lam+1)^-2 = 1
    m = n1_moment(EnsembleKind.WISHART_COMPLEX, E1, HARD) + n1_moment(EnsembleKind.WISHART_COMPLEX,
                                                                     E2, HARD)
    assert abs(m - 1) <= 1e-8


def test_wishart_real_example_passes():
    rep = verify(TheoremId.WISHART_REAL, E1, EnsembleSpec(EnsembleKind.WISHART_REAL, 4, nu=1),
                 HARD, 100_000, 11)
    assert rep.verdict == "pass", rep.row()


def test_goe_boundary_example_passes():
    rep = verify(TheoremId.GOE_BOUNDARY_EXACT, MultiIndex(), EnsembleSpec(EnsembleKind.GOE, 8),
                 SOFT, 100_000, 12)
    assert rep.verdict == "pass", rep.row()


def test_leading_identity_gets_scaling_only():
    rep = verify(TheoremId.GOE_GENERAL, E2, EnsembleSpec(EnsembleKind.GOE, 64), SOFT, 10_000, 13,
                 sampler="banded")
    assert rep.verdict == "scaling-only"
    assert np.isfinite(rep.residual.mean)


def test_printed_coefficients_fail_by_monte_carlo():
    spec = EnsembleSpec(EnsembleKind.WISHART_REAL, 4, nu=1)
    point = EvaluationPoint.hard(0.5)
    printed = verify(TheoremId.WISHART_REAL, E1, spec, point, 20_000, 5, form="printed")
    derived = verify(TheoremId.WISHART_REAL, E1, spec, point, 20_000, 5)
    assert printed.verdict == "fail" and derived.verdict == "pass"


def test_worker_invariance():
    spec = EnsembleSpec(EnsembleKind.WISHART_COMPLEX, 16, nu=1)
    cells = [(TheoremId.WISHART_COMPLEX, E1, HARD), (TheoremId.WISHART_COMPLEX_BOUNDARY, MultiIndex(), HARD)]
    a = verify_cells(spec, cells, 20_000, 3, workers=1)
    b = verify_cells(spec, cells, 20_000, 3, workers=3)
    assert [r.row() for r in a] == [r.row() for r in b]


def test_scaling_study_preconditions():
    with pytest.raises(ConfigurationError):
        scaling_study(TheoremId.GOE_BOUNDARY_EXACT, MultiIndex(), SOFT, [8, 16, 32, 64], 200, 0)
    with pytest.raises(ConfigurationError):
        scaling_study(TheoremId.GOE_BOUNDARY_LEADING, MultiIndex(), SOFT, [8, 16, 32], 200, 0)
    with pytest.raises(ConfigurationError):
        scaling_study(TheoremId.GOE_BOUNDARY_LEADING, MultiIndex(), SOFT, [8, 16, 40, 64], 200, 0)


def test_scaling_study_small_grid_structure():
    rep = scaling_study(TheoremId.GUE_BOUNDARY_LEADING, MultiIndex(), SOFT, [4, 8, 16, 32], 2000, 1)
    assert [r.n for r in rep.rows] == [4, 8, 16, 32]
    assert rep.verdict in ("pass", "fail", "inconclusive")
    assert np.isfinite(rep.exponent)
