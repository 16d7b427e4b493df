r"""Seed-driven samplers for the Gaussian and Wishart ensembles.

All matrices carry the ``1/sqrt(n)`` normalisation:

=============== ============================= =====================================
kind            stored entries                 entry law (before ``1/sqrt(n)``)
=============== ============================= =====================================
GOE             ``n x n`` real symmetric       off-diagonal N(0, 1), diagonal N(0, 2)
GUE             ``n x n`` Hermitian            Re/Im off-diagonal N(0, 1/2), diag N(0, 1)
WishartReal     ``n x N`` factor, N = n + nu   N(0, 1)
WishartComplex  ``n x N`` factor               Re/Im N(0, 1/2)
WignerCustom    ``n x n`` real symmetric       off-diagonal ``EntryLaw``, diagonal
                                               ``sqrt(2)`` times the same law
=============== ============================= =====================================

Randomness is counter based.  Sample ``index`` of a run with master seed ``seed``
reads a Philox stream keyed by ``(seed, index)``; the ``m``-th 64-bit word of
that stream feeds the ``m``-th entry variate, so a sample never depends on
which worker produced it or on how many samples were drawn before it.  A word
``w`` becomes the uniform ``((w >> 11) + 1/2) / 2**53`` in ``(0, 1)`` and Gaussian
variates are ``ndtri`` of those uniforms.

Entry order within a stream:

* GOE / WignerCustom: the upper triangle including the diagonal, row major.
* GUE: the upper triangle (row major) for the real parts, then the strict
  upper triangle for the imaginary parts.
* Wishart: the ``n x N`` factor row major; for the complex kind the real
  block comes first, then the imaginary block.

The tridiagonal / bidiagonal models of :func:`fast_equivalent_sample` use a
stream of ``2n - 1`` words: the ``n`` diagonal variates first, then the
``n - 1`` off-diagonal ones.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np
from scipy.special import gammaincinv, ndtri

__all__ = [
    "ConfigurationError",
    "EnsembleKind",
    "LawId",
    "EntryLaw",
    "EnsembleSpec",
    "MatrixSample",
    "BandedModel",
    "sample_ensemble",
    "sample_block",
    "fast_equivalent_sample",
    "fast_block",
    "entry_cumulants",
    "uniforms",
]

_MAX_SEED = 2**64


class ConfigurationError(ValueError):
    """Invalid ensemble, manifest or test-function configuration."""


class EnsembleKind(str, enum.Enum):
    GOE = "GOE"
    GUE = "GUE"
    WISHART_REAL = "WishartReal"
    WISHART_COMPLEX = "WishartComplex"
    WIGNER_CUSTOM = "WignerCustom"

    @property
    def is_wishart(self) -> bool:
        return self in (EnsembleKind.WISHART_REAL, EnsembleKind.WISHART_COMPLEX)

    @property
    def is_complex(self) -> bool:
        return self in (EnsembleKind.GUE, EnsembleKind.WISHART_COMPLEX)

    @property
    def beta(self) -> int:
        return 2 if self.is_complex else 1


class LawId(str, enum.Enum):
    GAUSSIAN = "gaussian"
    RADEMACHER = "rademacher"
    UNIFORM = "uniform"
    TABLE = "table"


@dataclass(frozen=True)
class EntryLaw:
    """Law of the unit-variance off-diagonal entries of a Wigner matrix.

    ``table`` laws are finite distributions given by ``values`` and
    ``probabilities``; they are standardised to mean 0 and variance 1 on
    construction.  Diagonal entries are ``sqrt(diag_variance)`` times a draw
    from the same law.
    """

    law_id: LawId
    values: tuple = ()
    probabilities: tuple = ()
    diag_variance: float = 2.0

    def __post_init__(self):
        object.__setattr__(self, "law_id", LawId(self.law_id))
        if self.diag_variance <= 0:
            raise ConfigurationError("diagonal variance must be positive")
        if self.law_id is LawId.TABLE:
            vals = np.asarray(self.values, dtype=float)
            probs = np.asarray(self.probabilities, dtype=float)
            if vals.ndim != 1 or vals.shape != probs.shape or vals.size < 2:
                raise ConfigurationError("table law needs matching values/probabilities")
            if np.any(probs < 0) or not np.isclose(probs.sum(), 1.0, atol=1e-12):
                raise ConfigurationError("table probabilities must be a distribution")
            mean = float(probs @ vals)
            std = float(np.sqrt(probs @ (vals - mean) ** 2))
            if std == 0:
                raise ConfigurationError("table law is degenerate")
            order = np.argsort(vals)
            object.__setattr__(self, "values", tuple(((vals - mean) / std)[order]))
            object.__setattr__(self, "probabilities", tuple(probs[order]))
        elif self.values or self.probabilities:
            raise ConfigurationError("values/probabilities only apply to table laws")

    @classmethod
    def parse(cls, text: str) -> "EntryLaw":
        """Build a law from its CLI id (``gaussian``, ``rademacher``, ``uniform``)."""
        try:
            law = LawId(text.strip().lower())
        except ValueError:
            raise ConfigurationError(f"unknown entry law {text!r}") from None
        if law is LawId.TABLE:
            raise ConfigurationError("table laws need values; build EntryLaw directly")
        return cls(law)

    @property
    def off_diag_variance(self) -> float:
        return 1.0

    @property
    def cumulants(self) -> tuple:
        return entry_cumulants(self)

    @property
    def fourth_moment(self) -> float:
        c1, c2, c3, c4 = self.cumulants
        return c4 + 3 * c2**2

    def transform(self, u: np.ndarray) -> np.ndarray:
        """Map uniforms on ``(0, 1)`` to variates of the standardised law."""
        if self.law_id is LawId.GAUSSIAN:
            return ndtri(u)
        if self.law_id is LawId.RADEMACHER:
            return np.where(u < 0.5, -1.0, 1.0)
        if self.law_id is LawId.UNIFORM:
            return np.sqrt(3.0) * (2.0 * u - 1.0)
        cdf = np.cumsum(self.probabilities)
        cdf[-1] = 1.0
        idx = np.searchsorted(cdf, u, side="right")
        return np.asarray(self.values)[np.minimum(idx, len(cdf) - 1)]


def entry_cumulants(entry_law: EntryLaw) -> tuple:
    """First four cumulants ``(c1, c2, c3, c4)`` of the off-diagonal law."""
    law = entry_law.law_id
    if law is LawId.GAUSSIAN:
        return (0.0, 1.0, 0.0, 0.0)
    if law is LawId.RADEMACHER:
        return (0.0, 1.0, 0.0, -2.0)
    if law is LawId.UNIFORM:
        # m4 = 9/5 for the uniform law on [-sqrt 3, sqrt 3]
        return (0.0, 1.0, 0.0, float(Fraction(9, 5) - 3))
    vals = np.asarray(entry_law.values)
    probs = np.asarray(entry_law.probabilities)
    m3 = float(probs @ vals**3)
    m4 = float(probs @ vals**4)
    return (0.0, 1.0, m3, m4 - 3.0)


@dataclass(frozen=True)
class EnsembleSpec:
    kind: EnsembleKind
    n: int
    nu: Optional[int] = None
    entry_law: Optional[EntryLaw] = None

    def __post_init__(self):
        try:
            object.__setattr__(self, "kind", EnsembleKind(self.kind))
        except ValueError:
            raise ConfigurationError(f"unknown ensemble {self.kind!r}") from None
        if not isinstance(self.n, (int, np.integer)) or self.n < 1:
            raise ConfigurationError(f"n must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if self.kind.is_wishart:
            if self.nu is None or int(self.nu) != self.nu or self.nu < 0:
                raise ConfigurationError("Wishart ensembles need an integer nu >= 0")
            object.__setattr__(self, "nu", int(self.nu))
        elif self.nu is not None:
            raise ConfigurationError(f"nu does not apply to {self.kind.value}")
        if self.kind is EnsembleKind.WIGNER_CUSTOM:
            if not isinstance(self.entry_law, EntryLaw):
                raise ConfigurationError("WignerCustom needs an entry_law")
        elif self.entry_law is not None:
            raise ConfigurationError(f"entry_law does not apply to {self.kind.value}")

    @property
    def N(self) -> int:
        return self.n + self.nu if self.kind.is_wishart else self.n

    @property
    def words_per_sample(self) -> int:
        n = self.n
        if self.kind in (EnsembleKind.GOE, EnsembleKind.WIGNER_CUSTOM):
            return n * (n + 1) // 2
        if self.kind is EnsembleKind.GUE:
            return n * n
        return n * self.N * self.kind.beta


@dataclass(frozen=True, eq=False)
class MatrixSample:
    """One dense draw.  Wishart samples keep the rectangular factor."""

    spec: EnsembleSpec
    seed: int
    entries: np.ndarray
    index: int = 0

    @property
    def product(self) -> np.ndarray:
        a = self.entries
        return a @ a.conj().T


@dataclass(frozen=True, eq=False)
class BandedModel:
    """Tridiagonal (Wigner) or lower-bidiagonal (Wishart) model.

    Only the eigenvalue law matches the dense ensemble; entry-level identities
    do not transfer, so decoupling code refuses these objects.
    """

    spec: EnsembleSpec
    seed: int
    diagonal: np.ndarray
    off_diagonal: np.ndarray
    index: int = 0
    equivalent_in_law: bool = field(default=True, init=False)

    @property
    def structure(self) -> str:
        return "bidiagonal" if self.spec.kind.is_wishart else "tridiagonal"

    def dense(self) -> np.ndarray:
        n = self.diagonal.shape[-1]
        out = np.zeros(self.diagonal.shape[:-1] + (n, n))
        idx = np.arange(n)
        out[..., idx, idx] = self.diagonal
        if n > 1:
            out[..., idx[1:], idx[:-1]] = self.off_diagonal
            if not self.spec.kind.is_wishart:
                out[..., idx[:-1], idx[1:]] = self.off_diagonal
        return out


def _check_seed(seed) -> int:
    if isinstance(seed, (bool, np.bool_)) or not isinstance(seed, (int, np.integer)):
        raise ConfigurationError(f"seed must be an integer, got {seed!r}")
    seed = int(seed)
    if not 0 <= seed < _MAX_SEED:
        raise ConfigurationError("seed must be a 64-bit unsigned integer")
    return seed


def uniforms(seed: int, indices: Sequence[int], count: int) -> np.ndarray:
    """``(len(indices), count)`` uniforms on ``(0, 1)`` from streams ``(seed, index)``."""
    seed = _check_seed(seed)
    indices = np.asarray(indices, dtype=np.uint64).reshape(-1)
    raw = np.empty((indices.size, count), dtype=np.uint64)
    key = np.empty(2, dtype=np.uint64)
    key[0] = seed
    for row, idx in enumerate(indices):
        key[1] = idx
        raw[row] = np.random.Philox(key=key).random_raw(count)
    return ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * 2.0**-53


def _assemble(spec: EnsembleSpec, u: np.ndarray) -> np.ndarray:
    """Build stacked matrices from rows of uniforms (entry order as documented)."""
    n, N = spec.n, spec.N
    S = u.shape[0]
    kind = spec.kind
    scale = 1.0 / np.sqrt(n)
    if kind.is_wishart:
        if kind is EnsembleKind.WISHART_REAL:
            return ndtri(u).reshape(S, n, N) * scale
        z = ndtri(u) * np.sqrt(0.5)
        return (z[:, : n * N] + 1j * z[:, n * N :]).reshape(S, n, N) * scale

    iu, ju = np.triu_indices(n)
    diag = iu == ju
    m = iu.size
    if kind is EnsembleKind.GOE:
        vals = ndtri(u[:, :m])
        vals[:, diag] *= np.sqrt(2.0)
        out = np.zeros((S, n, n))
    elif kind is EnsembleKind.WIGNER_CUSTOM:
        law = spec.entry_law
        vals = law.transform(u[:, :m])
        vals[:, diag] *= np.sqrt(law.diag_variance)
        out = np.zeros((S, n, n))
    else:
        re = ndtri(u[:, :m])
        re[:, ~diag] *= np.sqrt(0.5)
        im = np.zeros_like(re)
        im[:, ~diag] = ndtri(u[:, m:]) * np.sqrt(0.5)
        vals = re + 1j * im
        out = np.zeros((S, n, n), dtype=complex)
    out[:, iu, ju] = vals
    out[:, ju, iu] = vals.conj() if kind is EnsembleKind.GUE else vals
    return out * scale


def sample_ensemble(spec: EnsembleSpec, seed: int, index: int = 0) -> MatrixSample:
    """Draw one dense matrix (Wigner kinds) or rectangular factor (Wishart kinds)."""
    entries = _assemble(spec, uniforms(seed, [index], spec.words_per_sample))[0]
    return MatrixSample(spec=spec, seed=int(seed), entries=entries, index=int(index))


def sample_block(spec: EnsembleSpec, seed: int, start: int, stop: int) -> np.ndarray:
    """Stacked entries of samples ``start .. stop-1``; row ``k`` equals
    ``sample_ensemble(spec, seed, start + k).entries`` exactly."""
    u = uniforms(seed, range(start, stop), spec.words_per_sample)
    return _assemble(spec, u)


def _chi(dof: np.ndarray, u: np.ndarray) -> np.ndarray:
    return np.sqrt(2.0 * gammaincinv(0.5 * dof, u))


def _banded(spec: EnsembleSpec, u: np.ndarray):
    n, kind = spec.n, spec.kind
    beta = kind.beta
    scale = 1.0 / np.sqrt(n)
    ud, uo = u[:, :n], u[:, n:]
    if kind.is_wishart:
        # lower bidiagonal: diag chi_{beta N}, ..., chi_{beta(nu+1)}; sub chi_{beta(n-1)}, ..., chi_beta
        ddof = beta * (spec.N - np.arange(n))
        odof = beta * (n - 1 - np.arange(n - 1))
        diag = _chi(ddof, ud)
        off = _chi(odof, uo)
        if beta == 2:
            diag, off = diag * np.sqrt(0.5), off * np.sqrt(0.5)
        return diag * scale, off * scale
    odof = beta * (n - 1 - np.arange(n - 1))
    off = _chi(odof, uo)
    if kind is EnsembleKind.GOE:
        diag = ndtri(ud) * np.sqrt(2.0)
    else:
        diag = ndtri(ud)
        off = off * np.sqrt(0.5)
    return diag * scale, off * scale


def _check_fast(spec: EnsembleSpec):
    if spec.kind is EnsembleKind.WIGNER_CUSTOM:
        raise ConfigurationError("no equivalent-in-law banded model for WignerCustom")


def fast_equivalent_sample(spec: EnsembleSpec, seed: int, index: int = 0) -> BandedModel:
    """Banded matrix with the same eigenvalue (singular-value) law as the dense ensemble."""
    _check_fast(spec)
    diag, off = _banded(spec, uniforms(seed, [index], 2 * spec.n - 1))
    return BandedModel(spec=spec, seed=int(seed), diagonal=diag[0], off_diagonal=off[0],
                       index=int(index))


def fast_block(spec: EnsembleSpec, seed: int, start: int, stop: int):
    """Stacked ``(diagonal, off_diagonal)`` arrays for samples ``start .. stop-1``."""
    _check_fast(spec)
    return _banded(spec, uniforms(seed, range(start, stop), 2 * spec.n - 1))
