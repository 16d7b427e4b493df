"""Eigenvalues of samples and their edge-rescaled point configurations.

Wishart spectra are always squared singular values of the rectangular factor:
forming ``A A^T`` first would leave eigenvalues of order ``n**-2`` with no
relative accuracy.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np
from scipy.linalg import lapack

from .ensembles import BandedModel, ConfigurationError, EnsembleSpec, MatrixSample, fast_block, sample_block

__all__ = [
    "NumericalError",
    "Edge",
    "EdgeSpectrum",
    "spectrum",
    "soft_edge_points",
    "hard_edge_points",
    "edge_spectrum",
    "spectra_block",
    "PSD_TOLERANCE",
]

PSD_TOLERANCE = 1e-6


class NumericalError(ArithmeticError):
    """Eigensolver failure, singular shift or a violated positivity constraint."""


class Edge(str, enum.Enum):
    SOFT = "Soft"
    HARD = "Hard"


@dataclass(frozen=True, eq=False)
class EdgeSpectrum:
    """Eigenvalues (ascending) and rescaled points of one or many samples.

    Arrays may carry leading batch axes; the last axis runs over the ``n``
    eigenvalues.  Soft-edge points are stored largest first, hard-edge points
    smallest first.
    """

    n: int
    edge: Edge
    eigenvalues: np.ndarray
    xi: np.ndarray
    nu: Optional[int] = None

    @property
    def batch_shape(self) -> tuple:
        return self.xi.shape[:-1]


def _wigner_eigs(mats: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(mats)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"symmetric eigensolver did not converge: {exc}") from exc


def _wishart_eigs(factors: np.ndarray) -> np.ndarray:
    try:
        s = np.linalg.svd(factors, compute_uv=False)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"SVD did not converge: {exc}") from exc
    return np.sort(s**2, axis=-1)


def _tridiagonal_eigs(diag: np.ndarray, off: np.ndarray) -> np.ndarray:
    out = np.empty_like(diag)
    for row in range(diag.shape[0]):
        d, info = lapack.dsterf(diag[row], off[row])
        if info != 0:
            raise NumericalError(f"dsterf failed with info={info} on row {row}")
        out[row] = d
    return out


def spectrum(sample: Union[MatrixSample, BandedModel]) -> np.ndarray:
    """Ascending eigenvalues of a Wigner sample, or of ``A A^*`` for Wishart factors."""
    if isinstance(sample, BandedModel):
        if sample.spec.kind.is_wishart:
            return _wishart_eigs(sample.dense())
        return _tridiagonal_eigs(sample.diagonal[None], sample.off_diagonal[None])[0]
    if sample.spec.kind.is_wishart:
        return _wishart_eigs(sample.entries)
    return _wigner_eigs(sample.entries)


def soft_edge_points(eigenvalues, n: int) -> EdgeSpectrum:
    """``xi_j = (lambda_j - 2) n^(2/3)``, returned largest first."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.shape[-1] != n:
        raise ValueError(f"expected {n} eigenvalues, got {lam.shape[-1]}")
    xi = (lam - 2.0) * n ** (2.0 / 3.0)
    return EdgeSpectrum(n=n, edge=Edge.SOFT, eigenvalues=lam, xi=xi[..., ::-1])


def hard_edge_points(eigenvalues, n: int, nu: Optional[int] = None) -> EdgeSpectrum:
    """``xi_i = n^2 lambda_i`` ascending; roundoff negatives down to -1e-6 clamp to 0."""
    lam = np.asarray(eigenvalues, dtype=float)
    if lam.shape[-1] != n:
        raise ValueError(f"expected {n} eigenvalues, got {lam.shape[-1]}")
    if lam.size and lam.min() < -PSD_TOLERANCE:
        raise NumericalError(f"eigenvalue {lam.min():.3e} violates positive semi-definiteness")
    lam = np.maximum(lam, 0.0)
    return EdgeSpectrum(n=n, edge=Edge.HARD, eigenvalues=lam, xi=lam * float(n) ** 2, nu=nu)


def edge_spectrum(spec: EnsembleSpec, eigenvalues) -> EdgeSpectrum:
    """Soft-edge points for Wigner kinds, hard-edge points for Wishart kinds."""
    if spec.kind.is_wishart:
        return hard_edge_points(eigenvalues, spec.n, spec.nu)
    return soft_edge_points(eigenvalues, spec.n)


def spectra_block(spec: EnsembleSpec, seed: int, start: int, stop: int,
                  sampler: str = "dense") -> np.ndarray:
    """``(stop - start, n)`` ascending eigenvalues for consecutive sample indices.

    ``sampler="banded"`` draws the equivalent-in-law tridiagonal/bidiagonal
    models instead of dense matrices (different streams, same spectral law).
    """
    if sampler == "dense":
        entries = sample_block(spec, seed, start, stop)
        if spec.kind.is_wishart:
            return _wishart_eigs(entries)
        return _wigner_eigs(entries)
    if sampler == "banded":
        diag, off = fast_block(spec, seed, start, stop)
        if spec.kind.is_wishart:
            n = spec.n
            dense = np.zeros(diag.shape + (n,))
            idx = np.arange(n)
            dense[:, idx, idx] = diag
            dense[:, idx[1:], idx[:-1]] = off
            return _wishart_eigs(dense)
        return _tridiagonal_eigs(diag, off)
    raise ConfigurationError(f"unknown sampler {sampler!r}")
