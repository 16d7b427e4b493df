"""Airy and Bessel functions, the edge kernels and the global densities.

The special functions are implemented here rather than imported so the
kernels carry no special-function dependency; ``scipy.special`` serves only
as an oracle in the tests.

Airy: Maclaurin series on ``AIRY_SERIES_WINDOW`` and the large-argument
expansions outside it, truncated at the smallest term.  The window was chosen
by overlap testing: on ``[-8, -7]`` and ``[5, 6]`` both branches agree to
better than ``1e-11``.  Accuracy is guaranteed for ``|x| <= 30``; beyond that an
:class:`AccuracyWarning` is issued.

Bessel ``J_n`` for integer ``n >= 0``: ascending series for ``x <= 12``,
Miller's backward recurrence normalised by ``J_0 + 2 sum J_2k = 1`` above.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .statistics import DomainError

__all__ = [
    "AccuracyWarning",
    "KernelPoint",
    "airy_ai",
    "airy_ai_prime",
    "bessel_j",
    "airy_kernel",
    "bessel_kernel",
    "mp_density",
    "semicircle_density",
    "AIRY_WINDOW",
    "DIAGONAL_SWITCH",
]

AIRY_WINDOW = 30.0
AIRY_SERIES_WINDOW = (-7.5, 5.5)
BESSEL_SERIES_MAX = 12.0
DIAGONAL_SWITCH = 1e-4

# Ai(0) and Ai'(0), i.e. 3^(-2/3)/Gamma(2/3) and -3^(-1/3)/Gamma(1/3)
_AI0 = 0.35502805388781723926
_AIP0 = -0.25881940379280679840
_SQRT_PI = math.sqrt(math.pi)


class AccuracyWarning(UserWarning):
    """Argument outside the window where the stated accuracy is guaranteed."""


@dataclass(frozen=True)
class KernelPoint:
    x: float
    y: float
    nu: Optional[int] = None


def _vectorize(scalar):
    vec = np.vectorize(scalar, otypes=[float])

    def wrapper(x):
        if np.ndim(x) == 0:
            return scalar(float(x))
        return vec(np.asarray(x, dtype=float))

    wrapper.__name__ = scalar.__name__
    wrapper.__doc__ = scalar.__doc__
    return wrapper


# -- Airy ----------------------------------------------------------------------------

def _airy_series(x: float):
    """Ai and Ai' from the two Maclaurin solutions f, g of y'' = x y."""
    x3 = x**3
    tf, tg = 1.0, x
    tfp, tgp = 0.0, 1.0
    f, g, fp, gp = [tf], [tg], [], [tgp]
    for k in range(1, 400):
        tf = tf * x3 / ((3 * k - 1) * (3 * k))
        tg = tg * x3 / ((3 * k) * (3 * k + 1))
        tfp = x * x / 2 if k == 1 else tfp * x3 / ((3 * k - 3) * (3 * k - 1))
        tgp = tgp * x3 / ((3 * k - 2) * (3 * k))
        f.append(tf)
        g.append(tg)
        fp.append(tfp)
        gp.append(tgp)
        if max(abs(tf), abs(tg), abs(tfp), abs(tgp)) < 1e-18 * (1 + abs(f[0])):
            break
    ai = _AI0 * math.fsum(f) + _AIP0 * math.fsum(g)
    aip = _AI0 * math.fsum(fp) + _AIP0 * math.fsum(gp)
    return ai, aip


def _asymptotic_coefficients(count: int):
    u, v = [1.0], [1.0]
    for k in range(1, count):
        u.append(u[-1] * (6 * k - 5) * (6 * k - 3) * (6 * k - 1) / ((2 * k - 1) * 216 * k))
        v.append(-u[-1] * (6 * k + 1) / (6 * k - 1))
    return u, v


_U, _V = _asymptotic_coefficients(80)


def _truncated(coeffs, zeta, sign_pattern):
    """Sum ``sum_k s_k c_k zeta^-k`` up to (excluding) the first growing term."""
    total, prev = 0.0, math.inf
    power = 1.0
    for k, c in enumerate(coeffs):
        term = sign_pattern(k) * c * power
        if abs(term) > prev:
            break
        total += term
        prev = abs(term)
        if prev < 1e-17 * abs(total):
            break
        power /= zeta
    return total


def _airy_positive(x: float):
    zeta = 2.0 / 3.0 * x**1.5
    alt = lambda k: -1.0 if k % 2 else 1.0
    e = math.exp(-zeta) / (2 * _SQRT_PI)
    q = x**0.25
    return e / q * _truncated(_U, zeta, alt), -e * q * _truncated(_V, zeta, alt)


def _airy_negative(x: float):
    r = -x
    zeta = 2.0 / 3.0 * r**1.5
    q = r**0.25
    # even/odd parts of the expansion with alternating signs
    ue = _truncated(_U[0::2], zeta**2, lambda k: -1.0 if k % 2 else 1.0)
    uo = _truncated(_U[1::2], zeta**2, lambda k: -1.0 if k % 2 else 1.0) / zeta
    ve = _truncated(_V[0::2], zeta**2, lambda k: -1.0 if k % 2 else 1.0)
    vo = _truncated(_V[1::2], zeta**2, lambda k: -1.0 if k % 2 else 1.0) / zeta
    c, s = math.cos(zeta - math.pi / 4), math.sin(zeta - math.pi / 4)
    ai = (c * ue + s * uo) / (_SQRT_PI * q)
    aip = q * (s * ve - c * vo) / _SQRT_PI
    return ai, aip


def _airy_pair(x: float):
    if not math.isfinite(x):
        raise DomainError(f"Airy argument must be finite, got {x}")
    if abs(x) > AIRY_WINDOW:
        warnings.warn(f"Airy argument {x} outside |x| <= {AIRY_WINDOW}; accuracy not guaranteed",
                      AccuracyWarning, stacklevel=4)
    lo, hi = AIRY_SERIES_WINDOW
    if lo <= x <= hi:
        return _airy_series(x)
    if x > hi:
        return _airy_positive(x)
    return _airy_negative(x)


@_vectorize
def airy_ai(x):
    """Airy function ``Ai(x)``; absolute error below ``1e-10`` for ``|x| <= 30``."""
    return _airy_pair(x)[0]


@_vectorize
def airy_ai_prime(x):
    """Derivative ``Ai'(x)``; same accuracy window as :func:`airy_ai`."""
    return _airy_pair(x)[1]


# -- Bessel --------------------------------------------------------------------------

def _bessel_series(n: int, x: float) -> float:
    h = x / 2
    term = h**n / math.factorial(n)
    terms = [term]
    q = -h * h
    for k in range(1, 500):
        term = term * q / (k * (n + k))
        terms.append(term)
        if abs(term) < 1e-18 * max(abs(terms[0]), 1e-300):
            break
    return math.fsum(terms)


def _bessel_miller(n: int, x: float) -> float:
    top = max(n, int(x))
    start = 2 * ((top + 20 + int(math.sqrt(40 * top))) // 2)
    nxt, cur = 0.0, 1e-30
    norm = 0.0
    result = 0.0
    for k in range(start, 0, -1):
        prev = 2 * k / x * cur - nxt
        nxt, cur = cur, prev
        if abs(cur) > 1e250:
            # rescale to avoid overflow
            cur *= 1e-250
            nxt *= 1e-250
            norm *= 1e-250
            result *= 1e-250
        if (k - 1) == n:
            result = cur
        if (k - 1) % 2 == 0 and k - 1 > 0:
            norm += 2 * cur
    norm += cur  # J_0
    return result / norm


def _bessel_scalar(n: int, x: float) -> float:
    if x < 0:
        raise DomainError(f"bessel_j needs x >= 0, got {x}")
    if x == 0:
        return 1.0 if n == 0 else 0.0
    if x <= BESSEL_SERIES_MAX:
        return _bessel_series(n, x)
    return _bessel_miller(n, x)


def bessel_j(nu: int, x):
    """Bessel function ``J_nu(x)`` of integer order ``nu >= 0`` for ``x >= 0``.

    Absolute error below ``1e-10`` for ``x <= 50``.
    """
    if int(nu) != nu or nu < 0:
        raise DomainError(f"bessel_j needs a nonnegative integer order, got {nu}")
    nu = int(nu)
    if np.ndim(x) == 0:
        return _bessel_scalar(nu, float(x))
    return np.vectorize(lambda t: _bessel_scalar(nu, t), otypes=[float])(np.asarray(x, float))


def _bessel_signed(n: int, x: float) -> float:
    # J_{-n} = (-1)^n J_n
    if n < 0:
        return (-1) ** n * _bessel_scalar(-n, x)
    return _bessel_scalar(n, x)


# -- kernels -------------------------------------------------------------------------

def _airy_kernel_near(x: float, h: float) -> float:
    """Kernel at ``(x, x + h)`` from the Taylor coefficients of Ai about ``x``."""
    c0, c1 = _airy_pair(x)
    c = [c0, c1]
    for k in range(0, 14):
        # c_{k+2} (k+2)(k+1) = x c_k + c_{k-1}
        prev = c[k - 1] if k >= 1 else 0.0
        c.append((x * c[k] + prev) / ((k + 2) * (k + 1)))
    total = 0.0
    for k in range(1, 14):
        total += h ** (k - 1) * ((k + 1) * c0 * c[k + 1] - c1 * c[k])
    return -total


def _airy_kernel_scalar(x: float, y: float) -> float:
    h = y - x
    if abs(h) < DIAGONAL_SWITCH:
        if x > y:
            # evaluate from the smaller argument so K(x, y) == K(y, x) exactly
            return _airy_kernel_near(y, x - y)
        return _airy_kernel_near(x, h)
    ax, apx = _airy_pair(x)
    ay, apy = _airy_pair(y)
    return (ax * apy - apx * ay) / (x - y)


def airy_kernel(x, y):
    """Airy kernel ``(Ai(x) Ai'(y) - Ai'(x) Ai(y)) / (x - y)``.

    Near the diagonal (``|x - y| < 1e-4``) a Taylor expansion replaces the
    difference quotient; at ``x = y`` it reduces to ``Ai'(x)^2 - x Ai(x)^2``.
    """
    if np.ndim(x) == 0 and np.ndim(y) == 0:
        return _airy_kernel_scalar(float(x), float(y))
    return np.vectorize(_airy_kernel_scalar, otypes=[float])(x, y)


def _bessel_kernel_scalar(nu: int, x: float, y: float) -> float:
    if not (x > 0 and y > 0):
        raise DomainError(f"Bessel kernel needs x, y > 0, got ({x}, {y})")
    if x > y:
        x, y = y, x
    if abs(x - y) < DIAGONAL_SWITCH:
        # symmetric in (x, y), so the midpoint diagonal is second-order accurate
        u = math.sqrt((x + y) / 2)
        j = _bessel_signed(nu, u)
        return 0.25 * (j * j - _bessel_signed(nu + 1, u) * _bessel_signed(nu - 1, u))
    sx, sy = math.sqrt(x), math.sqrt(y)
    num = (sx * _bessel_scalar(nu + 1, sx) * _bessel_scalar(nu, sy)
           - _bessel_scalar(nu, sx) * sy * _bessel_scalar(nu + 1, sy))
    return num / (2 * (x - y))


def bessel_kernel(nu: int, x, y):
    """Hard-edge Bessel kernel of integer order ``nu``.

    ``[sqrt(x) J_{nu+1}(sqrt x) J_nu(sqrt y) - J_nu(sqrt x) sqrt(y) J_{nu+1}(sqrt y)] / (2(x - y))``,
    the sign for which the diagonal ``(J_nu^2 - J_{nu+1} J_{nu-1}) / 4`` (at
    ``sqrt x``) is a positive density.
    """
    if int(nu) != nu or nu < 0:
        raise DomainError(f"Bessel kernel needs a nonnegative integer order, got {nu}")
    nu = int(nu)
    if np.ndim(x) == 0 and np.ndim(y) == 0:
        return _bessel_kernel_scalar(nu, float(x), float(y))
    return np.vectorize(lambda a, b: _bessel_kernel_scalar(nu, a, b), otypes=[float])(x, y)


# -- global densities ----------------------------------------------------------------

def mp_density(x):
    """Marchenko-Pastur density for square factors: ``sqrt(4 - x) / (2 pi sqrt x)`` on ``(0, 4]``."""
    x = np.asarray(x, dtype=float)
    inside = (x > 0) & (x <= 4)
    safe = np.where(inside, x, 1.0)
    out = np.where(inside, np.sqrt(np.clip(4 - safe, 0, None)) / (2 * np.pi * np.sqrt(safe)), 0.0)
    return float(out) if out.ndim == 0 else out


def semicircle_density(x):
    """Semicircle density ``sqrt(4 - x^2) / (2 pi)`` on ``[-2, 2]``."""
    x = np.asarray(x, dtype=float)
    out = np.sqrt(np.clip(4 - x * x, 0, None)) / (2 * np.pi)
    return float(out) if out.ndim == 0 else out
