"""Resolvent-trace statistics, joint-moment observables and mergeable accumulators.

Soft edge (Wigner kinds), with ``xi`` the soft-edge points::

    g_k(z)  = sum_j (xi_j - z)^-k                       k >= 2
    g^c(z)  = n^(1/3) + sum_j (xi_j - z)^-1             centred first statistic

Hard edge (Wishart kinds)::

    g_k(t)  = sum_i (xi_i + t^2)^-k                     k >= 1

A multi-index ``K = (k_1, ..., k_j)`` labels the product
``f_1^k_1 * f_2^k_2 * ... * f_j^k_j`` where ``f_1`` is the centred statistic at
the soft edge and ``g_1`` at the hard edge; every other ``f_l`` is ``g_l``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, Iterable, Optional, Union

import numpy as np

from .spectra import Edge, EdgeSpectrum

__all__ = [
    "DomainError",
    "MultiIndex",
    "EvaluationPoint",
    "g_soft",
    "g_soft_centered",
    "g_hard",
    "product_observable",
    "TruncationSensitivity",
    "truncation_sensitivity",
    "multi_index_shift",
    "ObservableTable",
    "MomentAccumulator",
    "MomentEstimate",
    "accumulate",
    "merge",
    "estimate",
]


class DomainError(ValueError):
    """Argument outside the domain of a statistic or operation."""


@dataclass(frozen=True, order=True)
class MultiIndex:
    """Nonnegative exponents ``(k_1, ..., k_j)``; trailing zeros are stripped.

    Components are addressed 1-based, matching ``e_l``.
    """

    components: tuple = ()

    def __post_init__(self):
        comps = tuple(int(c) for c in self.components)
        if any(c < 0 for c in comps):
            raise DomainError(f"multi-index components must be >= 0: {comps}")
        while comps and comps[-1] == 0:
            comps = comps[:-1]
        object.__setattr__(self, "components", comps)

    @classmethod
    def of(cls, *components: int) -> "MultiIndex":
        return cls(components)

    @classmethod
    def unit(cls, l: int, times: int = 1) -> "MultiIndex":
        if l < 1:
            raise DomainError("unit multi-index needs l >= 1")
        return cls((0,) * (l - 1) + (times,))

    @classmethod
    def parse(cls, text: str) -> "MultiIndex":
        """Parse ``"k1,k2,...,kj"``; ``""`` and ``"0"`` give the zero index."""
        text = text.strip()
        if not text:
            return cls()
        parts = text.split(",")
        comps = []
        for part in parts:
            part = part.strip()
            if not part.isdigit():
                raise DomainError(f"malformed multi-index {text!r}")
            comps.append(int(part))
        return cls(tuple(comps))

    def __getitem__(self, l: int) -> int:
        """``k_l`` with ``l`` 1-based; zero beyond the stored length."""
        if l < 1:
            raise IndexError("multi-index components are 1-based")
        return self.components[l - 1] if l <= len(self.components) else 0

    def __add__(self, other: "MultiIndex") -> "MultiIndex":
        m = max(len(self.components), len(other.components))
        return MultiIndex(tuple(self[l] + other[l] for l in range(1, m + 1)))

    def __bool__(self) -> bool:
        return bool(self.components)

    def __str__(self) -> str:
        return ",".join(str(c) for c in self.components) or "0"

    @property
    def length(self) -> int:
        return len(self.components)

    @property
    def degree(self) -> int:
        return sum(self.components)

    @property
    def weight(self) -> int:
        return sum(l * k for l, k in enumerate(self.components, start=1))

    def nonzero(self) -> Iterable[int]:
        """1-based positions ``l`` with ``k_l >= 1``."""
        return [l for l, k in enumerate(self.components, start=1) if k]


def multi_index_shift(K: MultiIndex, minus: Optional[int] = None,
                      plus: Optional[int] = None) -> MultiIndex:
    """``K - e_minus + e_plus`` in canonical form.

    Callers drop terms whose coefficient ``k_l`` vanishes before shifting;
    asking for ``minus`` on a zero component is an error.
    """
    comps = list(K.components)
    if minus is not None:
        if K[minus] < 1:
            raise DomainError(f"cannot subtract e_{minus} from {K}")
        comps[minus - 1] -= 1
    if plus is not None:
        if plus < 1:
            raise DomainError("e_l needs l >= 1")
        comps += [0] * (plus - len(comps))
        comps[plus - 1] += 1
    return MultiIndex(tuple(comps))


@dataclass(frozen=True)
class EvaluationPoint:
    """Spectral parameter: complex ``z`` (soft edge) or real ``t`` (hard edge)."""

    edge: Edge
    value: Union[complex, float]

    def __post_init__(self):
        edge = Edge(self.edge)
        object.__setattr__(self, "edge", edge)
        if edge is Edge.SOFT:
            z = complex(self.value)
            if z.imag == 0:
                raise DomainError("soft-edge points need Im z != 0")
            object.__setattr__(self, "value", z)
        else:
            t = self.value
            if isinstance(t, complex):
                if t.imag != 0:
                    raise DomainError("hard-edge t must be real")
                t = t.real
            t = float(t)
            if t == 0 or not math.isfinite(t):
                raise DomainError("hard-edge points need a finite t != 0")
            object.__setattr__(self, "value", t)

    @classmethod
    def soft(cls, z: complex) -> "EvaluationPoint":
        return cls(Edge.SOFT, z)

    @classmethod
    def hard(cls, t: float) -> "EvaluationPoint":
        return cls(Edge.HARD, t)

    @property
    def z(self) -> complex:
        if self.edge is not Edge.SOFT:
            raise DomainError("hard-edge point has no z")
        return self.value

    @property
    def t(self) -> float:
        if self.edge is not Edge.HARD:
            raise DomainError("soft-edge point has no t")
        return self.value

    @property
    def label(self) -> str:
        if self.edge is Edge.SOFT:
            z = self.value
            return f"z={z.real:g}{z.imag:+g}i"
        return f"t={self.value:g}"

    @classmethod
    def parse(cls, label: str) -> "EvaluationPoint":
        key, _, val = label.partition("=")
        key = key.strip()
        try:
            if key == "z":
                return cls.soft(complex(val.strip().replace("i", "j")))
            if key == "t":
                return cls.hard(float(val))
        except ValueError:
            pass
        raise DomainError(f"malformed evaluation point {label!r}")


def _check_soft(spectrum: EdgeSpectrum, z) -> complex:
    if spectrum.edge is not Edge.SOFT:
        raise DomainError("soft-edge statistic on a hard-edge spectrum")
    z = complex(z)
    if z.imag == 0:
        raise DomainError("Im z must be non-zero")
    return z


def _check_k(k: int):
    if int(k) != k or k < 1:
        raise DomainError(f"power k must be a positive integer, got {k!r}")


def g_soft(spectrum: EdgeSpectrum, k: int, z: complex):
    """``sum_j (xi_j - z)^-k`` over the soft-edge points."""
    z = _check_soft(spectrum, z)
    _check_k(k)
    return np.sum((spectrum.xi - z) ** (-int(k)), axis=-1)


def _kahan_sum(terms: np.ndarray):
    total = np.zeros(terms.shape[:-1], dtype=terms.dtype)
    comp = np.zeros_like(total)
    for j in range(terms.shape[-1]):
        y = terms[..., j] - comp
        s = total + y
        comp = (s - total) - y
        total = s
    return total


def g_soft_centered(spectrum: EdgeSpectrum, z: complex):
    """``n^(-2/3) (n + Tr G)`` as a compensated sum of per-eigenvalue terms.

    Each term is ``n^(-2/3) + (xi_j - z)^-1 = (1 + n^(-2/3)(xi_j - z)) / (xi_j - z)``.
    """
    z = _check_soft(spectrum, z)
    d = spectrum.xi - z
    terms = (1.0 + spectrum.n ** (-2.0 / 3.0) * d) / d
    return _kahan_sum(terms)


def g_hard(spectrum: EdgeSpectrum, k: int, t: float):
    """``sum_i (xi_i + t^2)^-k`` over the hard-edge points (always positive)."""
    if spectrum.edge is not Edge.HARD:
        raise DomainError("hard-edge statistic on a soft-edge spectrum")
    _check_k(k)
    t = float(t)
    if t == 0:
        raise DomainError("t must be non-zero")
    return np.sum((spectrum.xi + t * t) ** (-int(k)), axis=-1)


@dataclass(frozen=True)
class TruncationSensitivity:
    """How much of ``g_k`` comes from eigenvalues below ``2 - delta``.

    ``change`` is ``|sum over removed j of (xi_j - z)^-k|`` per sample and
    ``bound`` the a priori ``n^(1 - 2k/3) (delta/2)^-k``.  This is a report,
    not an assertion.
    """

    k: int
    z: complex
    delta: float
    change: np.ndarray
    bound: float

    @property
    def max_ratio(self) -> float:
        return float(np.max(self.change) / self.bound)


def truncation_sensitivity(spectrum: EdgeSpectrum, k: int, z: complex,
                           delta: float = 0.5) -> TruncationSensitivity:
    """Drop the eigenvalues below ``2 - delta`` and measure the change of ``g_k``."""
    z = _check_soft(spectrum, z)
    _check_k(k)
    if delta <= 0:
        raise DomainError("delta must be positive")
    n = spectrum.n
    removed = spectrum.eigenvalues[..., ::-1] < 2.0 - delta  # aligned with xi (descending)
    terms = np.where(removed, (spectrum.xi - z) ** (-int(k)), 0)
    change = np.abs(np.sum(terms, axis=-1))
    bound = n ** (1.0 - 2.0 * k / 3.0) * (delta / 2.0) ** (-k)
    return TruncationSensitivity(int(k), z, float(delta), change, bound)


class ObservableTable:
    """Lazily evaluated statistics ``f_l`` of one (batched) spectrum at one point.

    Products for different multi-indices share the cached factors, so every
    term of a residual is evaluated on the same spectra.
    """

    def __init__(self, spectrum: EdgeSpectrum, point: EvaluationPoint):
        if spectrum.edge is not point.edge:
            raise DomainError(f"{point.edge.value} point on a {spectrum.edge.value} spectrum")
        self.spectrum = spectrum
        self.point = point
        self._factors: Dict[int, np.ndarray] = {}
        self._powers: Dict[tuple, np.ndarray] = {}

    def factor(self, l: int):
        if l not in self._factors:
            sp, pt = self.spectrum, self.point
            if pt.edge is Edge.HARD:
                val = g_hard(sp, l, pt.t)
            elif l == 1:
                val = g_soft_centered(sp, pt.z)
            else:
                val = g_soft(sp, l, pt.z)
            self._factors[l] = val
        return self._factors[l]

    def _power(self, l: int, k: int):
        key = (l, k)
        if key not in self._powers:
            self._powers[key] = self.factor(l) ** k
        return self._powers[key]

    def product(self, K: MultiIndex):
        """``prod_l f_l^k_l``; the zero multi-index gives ones."""
        out = np.ones(self.spectrum.batch_shape,
                      dtype=complex if self.point.edge is Edge.SOFT else float)
        for l in K.nonzero():
            out = out * self._power(l, K[l])
        return out


def product_observable(spectrum: EdgeSpectrum, K: MultiIndex, point: EvaluationPoint):
    """One realisation of the integrand of the joint moment ``m_K``."""
    if not K:
        raise DomainError("product observable needs a non-zero multi-index")
    return ObservableTable(spectrum, point).product(K)


@dataclass(frozen=True)
class MomentEstimate:
    mean: complex
    stderr: float
    count: int
    stderr_re: float
    stderr_im: float

    @staticmethod
    def _z(value: float, se: float) -> float:
        if se > 0:
            return value / se
        return 0.0 if value == 0 else math.copysign(math.inf, value)

    @property
    def z_re(self) -> float:
        return self._z(self.mean.real, self.stderr_re)

    @property
    def z_im(self) -> float:
        return self._z(self.mean.imag, self.stderr_im)


@dataclass
class MomentAccumulator:
    """Streaming count / mean / sum of squared deviations of a complex observable.

    ``m2`` is the sum of ``|x - mean|^2``; ``m2_re`` and ``m2_im`` split it
    into real and imaginary parts.  ``merge`` uses the pairwise (Chan et al.)
    update, so any partition of a stream gives the same result up to roundoff.
    """

    count: int = 0
    mean: complex = 0j
    m2_re: float = 0.0
    m2_im: float = 0.0

    @property
    def m2(self) -> float:
        return self.m2_re + self.m2_im

    def add(self, value) -> "MomentAccumulator":
        x = complex(value)
        self.count += 1
        delta = x - self.mean
        self.mean += delta / self.count
        self.m2_re += delta.real * (x.real - self.mean.real)
        self.m2_im += delta.imag * (x.imag - self.mean.imag)
        return self

    def add_many(self, values) -> "MomentAccumulator":
        """Fold a whole array in; one batch pass plus one merge."""
        x = np.asarray(values).reshape(-1)
        if x.size == 0:
            return self
        mean = complex(x.mean())
        dev = x - mean
        block = MomentAccumulator(int(x.size), mean,
                                  float(np.sum(dev.real**2)),
                                  float(np.sum(np.imag(dev) ** 2)))
        merged = merge(self, block)
        self.count, self.mean, self.m2_re, self.m2_im = (
            merged.count, merged.mean, merged.m2_re, merged.m2_im)
        return self

    def estimate(self) -> MomentEstimate:
        if self.count < 2:
            raise DomainError("standard error needs at least two values")
        denom = self.count * (self.count - 1)
        return MomentEstimate(
            mean=self.mean,
            stderr=math.sqrt(self.m2 / denom),
            count=self.count,
            stderr_re=math.sqrt(self.m2_re / denom),
            stderr_im=math.sqrt(self.m2_im / denom),
        )


def accumulate(acc: MomentAccumulator, value) -> MomentAccumulator:
    """Functional single-value update; ``acc`` is left untouched."""
    out = MomentAccumulator(acc.count, acc.mean, acc.m2_re, acc.m2_im)
    return out.add(value)


def merge(a: MomentAccumulator, b: MomentAccumulator) -> MomentAccumulator:
    if a.count == 0:
        return MomentAccumulator(b.count, b.mean, b.m2_re, b.m2_im)
    if b.count == 0:
        return MomentAccumulator(a.count, a.mean, a.m2_re, a.m2_im)
    n = a.count + b.count
    delta = b.mean - a.mean
    w = a.count * b.count / n
    return MomentAccumulator(
        count=n,
        mean=a.mean + delta * (b.count / n),
        m2_re=a.m2_re + b.m2_re + delta.real**2 * w,
        m2_im=a.m2_im + b.m2_im + delta.imag**2 * w,
    )


def estimate(acc: MomentAccumulator) -> MomentEstimate:
    return acc.estimate()
