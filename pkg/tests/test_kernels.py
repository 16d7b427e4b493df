import math
import warnings

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import integrate, special

from rmtedge.kernels import (AccuracyWarning, airy_ai, airy_ai_prime, airy_kernel, bessel_j, bessel_kernel,
                             mp_density, semicircle_density)
from rmtedge.statistics import DomainError

AI0 = 3 ** (-2 / 3) / math.gamma(2 / 3)
AIP0 = -(3 ** (-1 / 3)) / math.gamma(1 / 3)


def second_difference(f, x, h=1e-2):
    # one Richardson step: O(h^4) truncation
    def d2(step):
        return (f(x + step) - 2 * f(x) + f(x - step)) / step**2
    return (4 * d2(h / 2) - d2(h)) / 3


def test_airy_at_zero():
    assert airy_ai(0.0) == pytest.approx(AI0, abs=1e-15)
    assert airy_ai_prime(0.0) == pytest.approx(AIP0, abs=1e-15)
    assert AI0 == pytest.approx(0.3550280539, abs=1e-10)


def test_airy_against_scipy_on_window():
    x = np.linspace(-30, 30, 2401)
    ai, aip, _, _ = special.airy(x)
    assert np.max(np.abs(airy_ai(x) - ai)) <= 1e-10
    assert np.max(np.abs(airy_ai_prime(x) - aip)) <= 1e-10


def test_airy_branches_agree_on_overlap():
    from rmtedge import kernels
    for lo, hi in ((-8.0, -7.0), (5.0, 6.0)):
        for x in np.linspace(lo, hi, 11):
            series = kernels._airy_series(x)
            asym = kernels._airy_negative(x) if x < 0 else kernels._airy_positive(x)
            assert abs(series[0] - asym[0]) <= 1e-10
            assert abs(series[1] - asym[1]) <= 1e-10


def test_airy_flags_outside_window():
    with pytest.warns(AccuracyWarning):
        airy_ai(31.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        airy_ai(29.0)


@pytest.mark.parametrize("x", [-2.0, 0.0, 2.0, -6.0, 7.0])
def test_airy_equation(x):
    assert abs(second_difference(airy_ai, x) - x * airy_ai(x)) <= 1e-6


def test_bessel_at_zero():
    assert bessel_j(0, 0.0) == 1.0
    assert bessel_j(1, 0.0) == 0.0


@pytest.mark.parametrize("x", [1.0, 5.0, 10.0])
@pytest.mark.parametrize("nu", range(1, 6))
def test_bessel_recurrence(x, nu):
    lhs = bessel_j(nu - 1, x) + bessel_j(nu + 1, x)
    assert abs(lhs - 2 * nu / x * bessel_j(nu, x)) <= 1e-9


def test_bessel_against_scipy():
    x = np.linspace(0, 50, 1001)
    for nu in range(0, 12):
        assert np.max(np.abs(bessel_j(nu, x) - special.jv(nu, x))) <= 1e-10


@pytest.mark.parametrize("nu", [0, 1, 2])
@pytest.mark.parametrize("x", [1.0, 5.0, 10.0, 30.0])
def test_bessel_equation(nu, x):
    f = lambda t: bessel_j(nu, t)
    d1 = (f(x + 1e-4) - f(x - 1e-4)) / 2e-4
    res = x * x * second_difference(f, x) + x * d1 + (x * x - nu * nu) * f(x)
    assert abs(res) <= 1e-6 * max(1.0, x * x)


def test_bessel_domain():
    with pytest.raises(DomainError):
        bessel_j(1.5, 1.0)
    with pytest.raises(DomainError):
        bessel_j(-1, 1.0)
    with pytest.raises(DomainError):
        bessel_kernel(0, 0.0, 1.0)
    with pytest.raises(DomainError):
        bessel_kernel(0, 1.0, -2.0)


def _airy_integral(x, y):
    val, _ = integrate.quad(lambda s: special.airy(x + s)[0] * special.airy(y + s)[0], 0, 40,
                            epsabs=1e-13, epsrel=1e-12, limit=200)
    return val


@pytest.mark.parametrize("x,y", [(0, 1), (-1, 2), (1, 1.0001), (1, 1.00001), (-3, -3)])
def test_airy_kernel_integral_form(x, y):
    assert abs(airy_kernel(x, y) - _airy_integral(x, y)) <= 1e-8


def test_airy_kernel_grid():
    pts = np.linspace(-3, 3, 5)
    for x in pts:
        for y in pts:
            assert abs(airy_kernel(x, y) - _airy_integral(x, y)) <= 1e-8


def test_airy_kernel_diagonal():
    assert airy_kernel(0.0, 0.0) == pytest.approx(AIP0**2, abs=1e-15)
    assert airy_kernel(0.0, 0.0) == pytest.approx(0.066987, abs=1e-6)
    for x in (-2.0, 1.5):
        d = airy_ai_prime(x) ** 2 - x * airy_ai(x) ** 2
        assert airy_kernel(x, x) == pytest.approx(d, rel=1e-13)
        # both branches agree just past the switch
        from rmtedge import kernels
        h = 1.01e-4
        assert abs(kernels._airy_kernel_near(x, h) - airy_kernel(x, x + h)) <= 1e-10


@given(st.floats(-10, 10), st.floats(-10, 10))
def test_airy_kernel_symmetry(x, y):
    assert airy_kernel(x, y) == airy_kernel(y, x)


@given(st.floats(0.01, 40), st.floats(0.01, 40), st.integers(0, 4))
def test_bessel_kernel_symmetry(x, y, nu):
    assert bessel_kernel(nu, x, y) == bessel_kernel(nu, y, x)


def test_bessel_kernel_continuity():
    a, b = bessel_kernel(0, 1.0, 1 - 1e-5), bessel_kernel(0, 1.0, 1 + 1e-5)
    assert abs(a - b) <= 1e-6
    assert abs(bessel_kernel(0, 1.0, 1.0) - a) <= 1e-6


def _first_zero(nu):
    lo, hi = 0.5 + nu, 4.0 + 1.5 * nu
    while bessel_j(nu, hi) * bessel_j(nu, lo) > 0:
        hi += 0.5
    for _ in range(100):
        mid = 0.5 * (lo + hi)
        if bessel_j(nu, lo) * bessel_j(nu, mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("nu", [0, 1, 2, 3])
def test_bessel_kernel_diagonal_positive(nu):
    j1 = _first_zero(nu)
    assert j1 == pytest.approx(special.jn_zeros(nu, 1)[0], abs=1e-9)
    for x in np.linspace(1e-3, j1**2, 200)[:-1]:
        assert bessel_kernel(nu, x, x) > 0


def test_bessel_kernel_closed_form_sign():
    # the kernel as a difference quotient of the standard form
    x, y = 1.0, 1.1
    sx, sy = math.sqrt(x), math.sqrt(y)
    standard = (sx * special.jv(1, sx) * special.jv(0, sy) - special.jv(0, sx) * sy * special.jv(1, sy)) \
        / (2 * (x - y))
    assert bessel_kernel(0, x, y) == pytest.approx(standard, rel=1e-10)
    assert bessel_kernel(0, x, y) > 0


def test_bessel_kernel_is_integral_of_products():
    # K(x, y) = (1/4) int_0^1 J(sqrt(s x)) J(sqrt(s y)) ds
    for nu in (0, 2):
        for x, y in ((1.0, 1.1), (0.3, 5.0), (2.0, 2.0)):
            val, _ = integrate.quad(lambda s: special.jv(nu, math.sqrt(s * x)) * special.jv(nu, math.sqrt(s * y)),
                                    0, 1, epsabs=1e-14)
            assert bessel_kernel(nu, x, y) == pytest.approx(val / 4, abs=1e-10)


def test_density_values():
    assert mp_density(2.0) == pytest.approx(1 / (2 * math.pi), rel=1e-14)
    assert semicircle_density(0.0) == pytest.approx(1 / math.pi, rel=1e-14)
    assert mp_density(-1.0) == 0 and mp_density(5.0) == 0 and mp_density(0.0) == 0
    assert semicircle_density(2.5) == 0


def test_density_normalization():
    semi, _ = integrate.quad(semicircle_density, -2, 2, epsabs=1e-13)
    # the 1/sqrt(x) singularity is integrated with an algebraic weight
    mp, _ = integrate.quad(lambda x: math.sqrt(4 - x) / (2 * math.pi), 0, 4, weight="alg", wvar=(-0.5, 0))
    assert abs(semi - 1) <= 1e-8 and abs(mp - 1) <= 1e-8
    direct, _ = integrate.quad(mp_density, 0, 4, limit=200)
    assert abs(direct - 1) <= 1e-8
