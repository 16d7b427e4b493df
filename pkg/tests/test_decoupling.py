import numpy as np
import pytest

from rmtedge.decoupling import (Symmetry, decoupling_quadrature_n1, derivative_analytic, derivative_matrix,
                                finite_difference_derivative, finite_difference_trace_power,
                                gaussian_decoupling_check, resolve_diagonal_convention, resolvent,
                                trace_power_derivative, truncated_expansion_residual)
from rmtedge.ensembles import (ConfigurationError, EnsembleKind, EnsembleSpec, EntryLaw, MatrixSample,
                               fast_equivalent_sample, sample_ensemble)
from rmtedge.spectra import NumericalError
from rmtedge.statistics import DomainError, EvaluationPoint, MultiIndex

SOFT = EvaluationPoint.soft(1j)


def _zero(kind, n, nu=None):
    shape = (n, n + nu) if nu is not None else (n, n)
    return MatrixSample(EnsembleSpec(EnsembleKind(kind), n, nu=nu), 0, np.zeros(shape))


def test_resolvent_of_zero_matrix():
    res = resolvent(_zero("GOE", 2), SOFT)
    w = 2 + 1j * 2 ** (-2 / 3)
    np.testing.assert_allclose(res.G, -np.eye(2) / w, rtol=1e-14)
    hard = resolvent(sample_ensemble(EnsembleSpec(EnsembleKind.WISHART_REAL, 3, nu=1), 0),
                     EvaluationPoint.hard(1.0))
    M = hard.base_matrix()
    np.testing.assert_allclose(hard.G @ (M + np.eye(3) / 9), np.eye(3), atol=1e-10)


def test_resolvent_rejects_wrong_inputs():
    with pytest.raises(ConfigurationError):
        resolvent(fast_equivalent_sample(EnsembleSpec(EnsembleKind.GOE, 4), 0), SOFT)
    with pytest.raises(DomainError):
        resolvent(_zero("GOE", 2), EvaluationPoint.hard(1.0))


def test_resolvent_identity_violation_is_reported():
    # a huge entry makes the shifted matrix numerically singular
    A = np.array([[1e300, 1e300], [1e300, 1e300]])
    with pytest.raises(NumericalError), np.errstate(all="ignore"):
        resolvent(MatrixSample(EnsembleSpec(EnsembleKind.GOE, 2), 0, A), SOFT)


def test_derivative_at_zero_matrix():
    res = resolvent(_zero("GOE", 2), SOFT)
    w = 2 + 1j * 2 ** (-2 / 3)
    # dG_11/dA_12 vanishes, dG_12/dA_12 = -G_11 G_22
    assert derivative_analytic(res, 0, 0, 0, 1, Symmetry.REAL_SYMMETRIC) == 0
    assert derivative_analytic(res, 0, 1, 0, 1, Symmetry.REAL_SYMMETRIC) == pytest.approx(-1 / w**2)
    assert derivative_analytic(res, 0, 0, 0, 0, Symmetry.REAL_SYMMETRIC) == pytest.approx(-1 / w**2)


def _rel(a, b, G):
    return np.max(np.abs(a - b)) / max(np.max(np.abs(G)) ** 2, 1e-300)


CASES = [("GOE", None, Symmetry.REAL_SYMMETRIC, SOFT),
         ("GUE", None, Symmetry.HERMITIAN_RE, SOFT),
         ("GUE", None, Symmetry.HERMITIAN_IM, EvaluationPoint.soft(1 + 1j)),
         ("WishartReal", 2, Symmetry.RECTANGULAR_REAL, EvaluationPoint.hard(1.0))]


@pytest.mark.parametrize("kind,nu,sym,point", CASES)
def test_derivatives_match_finite_differences(kind, nu, sym, point):
    for idx in range(5):
        s = sample_ensemble(EnsembleSpec(EnsembleKind(kind), 3, nu=nu), 21, idx)
        res = resolvent(s, point)
        cols = s.entries.shape[1]
        for i in range(3):
            for j in range(cols):
                if sym is Symmetry.HERMITIAN_IM and i == j:
                    continue
                an = derivative_matrix(res, i, j, sym)
                fd = finite_difference_derivative(res, i, j, sym)
                assert _rel(an, fd, res.G) <= 1e-6
                assert an[1, 2] == pytest.approx(derivative_analytic(res, 1, 2, i, j, sym), rel=1e-13)


def test_pair_perturbation_structure():
    s = sample_ensemble(EnsembleSpec(EnsembleKind.GOE, 3), 2)
    res = resolvent(s, SOFT)
    G = res.G
    fd = finite_difference_derivative(res, 0, 1, Symmetry.REAL_SYMMETRIC)
    two = -G[2, 0] * G[1, 2] - G[2, 1] * G[0, 2]
    one = -G[2, 0] * G[1, 2]
    assert abs(fd[2, 2] - two) <= 1e-7 * abs(two)
    assert abs(fd[2, 2] - one) > 1e-3 * abs(two)


def test_symmetry_class_checks():
    res = resolvent(sample_ensemble(EnsembleSpec(EnsembleKind.GUE, 3), 0), SOFT)
    with pytest.raises(DomainError):
        derivative_analytic(res, 0, 0, 1, 1, Symmetry.HERMITIAN_IM)
    with pytest.raises(DomainError):
        derivative_matrix(res, 0, 1, Symmetry.REAL_SYMMETRIC)


@pytest.mark.parametrize("kind,nu,sym,point", CASES)
def test_trace_power_matches_finite_differences(kind, nu, sym, point):
    s = sample_ensemble(EnsembleSpec(EnsembleKind(kind), 4, nu=nu), 5)
    res = resolvent(s, point)
    for l in (1, 2, 3):
        for i, j in ((0, 1), (2, 1), (1, 1)):
            if sym is Symmetry.HERMITIAN_IM and i == j:
                continue
            an = trace_power_derivative(res, l, i, j, symmetry=sym)
            fd = finite_difference_trace_power(res, l, i, j, symmetry=sym)
            assert abs(an - fd) <= 1e-6 * max(abs(fd), np.max(np.abs(res.G)) ** (l + 1))


def test_trace_power_is_consistent_with_entry_derivatives():
    res = resolvent(sample_ensemble(EnsembleSpec(EnsembleKind.GOE, 4), 9), SOFT)
    for l in (1, 2):
        G = res.G
        dG = derivative_matrix(res, 0, 2, Symmetry.REAL_SYMMETRIC)
        Gp = np.linalg.matrix_power(G, l - 1)
        chain = l * np.trace(Gp @ dG)
        assert trace_power_derivative(res, l, 0, 2) == pytest.approx(chain, rel=1e-10)


def test_diagonal_convention():
    res = resolvent(sample_ensemble(EnsembleSpec(EnsembleKind.GOE, 3), 4), SOFT)
    assert resolve_diagonal_convention(res) == "single"
    with pytest.raises(ConfigurationError):
        trace_power_derivative(res, 1, 0, 0, "other")


def test_constant_test_function():
    rep = gaussian_decoupling_check(EnsembleSpec(EnsembleKind.GOE, 4), "one", (0, 1), SOFT, 20_000, 1)
    assert rep.verdict == "pass"
    assert rep.rhs.mean == 0


def test_goe_two_by_two_entry():
    rep = gaussian_decoupling_check(EnsembleSpec(EnsembleKind.GOE, 2), "G_ji", (0, 1), SOFT, 100_000, 2)
    assert rep.verdict == "pass", (rep.z_re, rep.z_im)


def test_gue_imaginary_part():
    rep = gaussian_decoupling_check(EnsembleSpec(EnsembleKind.GUE, 3), "G_ji", (0, 2), SOFT, 50_000, 3,
                                    part="im")
    assert rep.verdict == "pass", (rep.z_re, rep.z_im)


@pytest.mark.parametrize("kind", [EnsembleKind.GOE, EnsembleKind.GUE])
@pytest.mark.parametrize("obs,K", [("one", None), ("G_ji", None), ("G_ji_PK", MultiIndex.of(1)),
                                   ("G_ji_PK", MultiIndex.of(0, 1))])
def test_quadrature_n1(kind, obs, K):
    lhs, rhs = decoupling_quadrature_n1(kind, EvaluationPoint.soft(1 + 1j), obs, K)
    assert abs(lhs - rhs) <= 1e-8


def test_decoupling_errors():
    spec = EnsembleSpec(EnsembleKind.GOE, 3)
    with pytest.raises(ConfigurationError):
        gaussian_decoupling_check(spec, "exp", (0, 1), SOFT, 1000, 0)
    with pytest.raises(ConfigurationError):
        gaussian_decoupling_check(spec, "G_ji_PK", (0, 1), SOFT, 1000, 0)
    with pytest.raises(ConfigurationError):
        gaussian_decoupling_check(spec, "G_ji", (0, 3), SOFT, 1000, 0)
    with pytest.raises(ConfigurationError):
        gaussian_decoupling_check(spec, "G_ji", (0, 1), SOFT, 1000, 0, part="im")
    with pytest.raises(ConfigurationError):
        gaussian_decoupling_check(EnsembleSpec(EnsembleKind.WISHART_REAL, 3, nu=0), "G_ji", (0, 1),
                                  EvaluationPoint.hard(1.0), 1000, 0)


def test_truncation_gaussian_law():
    rep = truncated_expansion_residual(EntryLaw("gaussian"), 16, 1j, 2, 4000, 1)
    assert rep.verdict == "pass"
    assert rep.third_cumulant.mean == 0


@pytest.mark.parametrize("law", ["rademacher", "uniform"])
def test_truncation_symmetric_laws_have_no_third_cumulant_term(law):
    rep = truncated_expansion_residual(EntryLaw(law), 16, 1j, 2, 500, 1)
    assert rep.verdict == "measured"
    assert rep.cumulants[2] == 0
    assert rep.third_cumulant.mean == 0 and rep.third_cumulant.stderr == 0
    assert np.isfinite(rep.remainder.mean)


def test_truncation_skewed_law_third_term():
    law = EntryLaw("table", values=(0.0, 3.0), probabilities=(0.75, 0.25))
    rep = truncated_expansion_residual(law, 8, 1j, 2, 500, 2)
    assert rep.cumulants[2] != 0
    assert rep.third_cumulant.mean != 0


def test_truncation_order_checked():
    with pytest.raises(ConfigurationError):
        truncated_expansion_residual(EntryLaw("gaussian"), 8, 1j, 3, 200)
