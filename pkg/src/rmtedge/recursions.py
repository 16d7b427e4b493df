"""Residual observables for the joint-moment recursions and their Monte Carlo checks.

Each identity is stored symbolically as a list of ``Term(coefficient, J)``
meaning ``sum coefficient * P_J`` with ``P_J`` the product observable of
multi-index ``J`` (``P_0 = 1``).  The expectation of that sum is what an
identity claims.  Exact identities hold at every finite ``n`` and are judged
with z-scores; leading-order ones only through their decay in ``n``.

Exact identities (expectation zero):

* ``WishartReal`` / ``WishartComplex`` and their boundary (``K = 0``) forms.
  The default ``form="derived"`` coefficients come from redoing the Gaussian
  integration by parts; ``form="printed"`` keeps the coefficients as they are
  usually quoted, ``(nu - t^-2 + 1/n)`` and ``m_K / (n t^2)`` for the real case,
  which only agree with the derived ones at ``t = 1`` (and ``n = 1`` for the
  ``m_K`` term).
* ``GOE_boundary_exact``:
  ``n^(2/3)(1-c) - (2 + z n^(-2/3))^-1 (P_2e1 + P_e2) - n^(1/3)(1-c) P_e1``
  with ``c = (1 + z n^(-2/3)/2)^-1``.
* ``GOE_general_exact``, ``GUE_general_exact``, ``GUE_boundary_exact``: the
  leading-order residual minus its exact mean ``z n^(-1/3) P_{K+e1}``.

Leading-order residual (``GOE_general``, ``GUE_general`` and ``*_boundary_leading``)::

    z P_K - P_{K+2e1} - [GOE] P_{K+e2} - kappa sum_l l k_l P_{K-e_l+e_{l+2}}

with ``kappa = 2`` (GOE) or ``1`` (GUE).
"""
from __future__ import annotations

import enum
import functools
import math
import warnings
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np
from scipy import integrate, special

from ._parallel import chunk_bounds, chunk_size, run_chunks
from .ensembles import ConfigurationError, EnsembleKind, EnsembleSpec
from .spectra import Edge, EdgeSpectrum, edge_spectrum, hard_edge_points, soft_edge_points, spectra_block
from .statistics import (DomainError, EvaluationPoint, MomentAccumulator, MomentEstimate, MultiIndex,
                         ObservableTable, merge, multi_index_shift)

__all__ = [
    "TheoremId",
    "Term",
    "RecursionReport",
    "ScalingRow",
    "ScalingReport",
    "PASS_THRESHOLD",
    "DEFAULT_SOFT_POINTS",
    "DEFAULT_HARD_POINTS",
    "residual_terms",
    "residual_observable",
    "admit_derived",
    "verify",
    "verify_cells",
    "n1_expectation",
    "n1_moment",
    "scaling_study",
]

PASS_THRESHOLD = 4.0
DEFAULT_SOFT_POINTS = (1j, 1 + 1j, 2j)
DEFAULT_HARD_POINTS = (0.5, 1.0, 2.0)
# bound on |(E Tr G + n) / n^(2/3)| accepted as "bounded" by the scaling study
MATOZH_BOUND = 5.0


class TheoremId(str, enum.Enum):
    GOE_GENERAL = "GOE_general"
    GOE_BOUNDARY_EXACT = "GOE_boundary_exact"
    GOE_BOUNDARY_LEADING = "GOE_boundary_leading"
    GUE_GENERAL = "GUE_general"
    GUE_BOUNDARY_LEADING = "GUE_boundary_leading"
    WISHART_REAL = "WishartReal"
    WISHART_REAL_BOUNDARY = "WishartReal_boundary"
    WISHART_COMPLEX = "WishartComplex"
    WISHART_COMPLEX_BOUNDARY = "WishartComplex_boundary"
    # exact finite-n forms obtained by redoing the integration by parts
    GOE_GENERAL_EXACT = "GOE_general_exact"
    GUE_GENERAL_EXACT = "GUE_general_exact"
    GUE_BOUNDARY_EXACT = "GUE_boundary_exact"

    @property
    def kind(self) -> EnsembleKind:
        v = self.value
        if v.startswith("GOE"):
            return EnsembleKind.GOE
        if v.startswith("GUE"):
            return EnsembleKind.GUE
        if v.startswith("WishartReal"):
            return EnsembleKind.WISHART_REAL
        return EnsembleKind.WISHART_COMPLEX

    @property
    def edge(self) -> Edge:
        return Edge.HARD if self.kind.is_wishart else Edge.SOFT

    @property
    def is_boundary(self) -> bool:
        return "boundary" in self.value

    @property
    def exact(self) -> bool:
        return self not in _LEADING

    @property
    def derived(self) -> bool:
        return self in _DERIVED


_LEADING = {TheoremId.GOE_GENERAL, TheoremId.GOE_BOUNDARY_LEADING,
            TheoremId.GUE_GENERAL, TheoremId.GUE_BOUNDARY_LEADING}
_DERIVED = {TheoremId.GOE_GENERAL_EXACT, TheoremId.GUE_GENERAL_EXACT,
            TheoremId.GUE_BOUNDARY_EXACT}


@dataclass(frozen=True)
class Term:
    coefficient: complex
    index: MultiIndex


def _e(l: int, times: int = 1) -> MultiIndex:
    return MultiIndex.unit(l, times)


def _wishart_terms(theorem: TheoremId, K: MultiIndex, t: float, n: int, nu: int,
                   form: str) -> List[Term]:
    real = theorem.kind is EnsembleKind.WISHART_REAL
    t2 = t * t
    if form == "derived":
        lead = ((nu - 1) if real else nu) / t2 + 1.0 / n
        const = -1.0 / t2
    else:
        lead = (nu - 1.0 / t2 if real else nu) + 1.0 / n
        const = -1.0 / t2 if theorem.is_boundary else -1.0 / (n * t2)
    mult = 2.0 if real else 1.0
    terms = [Term(lead, K + _e(1))]
    if real:
        terms.append(Term(1.0, K + _e(2)))
    terms.append(Term(1.0, K + _e(1, 2)))
    for l in K.nonzero():
        w = l * K[l]
        terms.append(Term(mult * w, multi_index_shift(K, l, l + 2)))
        terms.append(Term(-mult * w / t2, multi_index_shift(K, l, l + 1)))
    terms.append(Term(const, K))
    return terms


def _leading_terms(theorem: TheoremId, K: MultiIndex, z: complex) -> List[Term]:
    goe = theorem.kind is EnsembleKind.GOE
    kappa = 2.0 if goe else 1.0
    terms = [Term(z, K), Term(-1.0, K + _e(1, 2))]
    if goe:
        terms.append(Term(-1.0, K + _e(2)))
    for l in K.nonzero():
        terms.append(Term(-kappa * l * K[l], multi_index_shift(K, l, l + 2)))
    return terms


def residual_terms(theorem: TheoremId, K: MultiIndex, point: EvaluationPoint, n: int,
                   nu: Optional[int] = None, form: str = "derived") -> List[Term]:
    """Symbolic residual ``sum c * P_J`` of one identity at one ``(n, nu, point)``."""
    theorem = TheoremId(theorem)
    if form not in ("derived", "printed"):
        raise ConfigurationError(f"unknown coefficient form {form!r}")
    if point.edge is not theorem.edge:
        raise DomainError(f"{theorem.value} needs a {theorem.edge.value}-edge point")
    if theorem.is_boundary and K:
        raise DomainError(f"{theorem.value} is the K = 0 identity")
    if not theorem.is_boundary and not K:
        raise DomainError(f"{theorem.value} needs a non-zero multi-index")

    if theorem.kind.is_wishart:
        if nu is None:
            raise ConfigurationError("Wishart identities need nu")
        return _wishart_terms(theorem, K, point.t, n, nu, form)

    z = point.z
    if theorem is TheoremId.GOE_BOUNDARY_EXACT:
        s = z * n ** (-2.0 / 3.0)
        one_minus_c = 1.0 - 1.0 / (1.0 + s / 2.0)
        w_inv = 1.0 / (2.0 + s)
        return [Term(n ** (2.0 / 3.0) * one_minus_c, MultiIndex()),
                Term(-w_inv, _e(1, 2)),
                Term(-w_inv, _e(2)),
                Term(-n ** (1.0 / 3.0) * one_minus_c, _e(1))]
    terms = _leading_terms(theorem, K, z)
    if theorem.derived:
        terms.append(Term(-z * n ** (-1.0 / 3.0), K + _e(1)))
    return terms


def _evaluate(terms: Sequence[Term], table: ObservableTable):
    total = 0
    for term in terms:
        total = total + term.coefficient * table.product(term.index)
    return total


def _check_spec(theorem: TheoremId, spec: EnsembleSpec):
    if spec.kind is not theorem.kind:
        raise ConfigurationError(f"{theorem.value} is about {theorem.kind.value}, "
                                 f"not {spec.kind.value}")


def residual_observable(theorem: TheoremId, K: MultiIndex, spectrum: EdgeSpectrum,
                        point: EvaluationPoint, spec: EnsembleSpec, form: str = "derived"):
    """Per-sample value whose expectation the identity asserts (batched over spectra)."""
    theorem = TheoremId(theorem)
    _check_spec(theorem, spec)
    if spectrum.edge is not theorem.edge:
        raise DomainError(f"{theorem.value} needs a {theorem.edge.value}-edge spectrum")
    terms = residual_terms(theorem, K, point, spec.n, spec.nu, form)
    return _evaluate(terms, ObservableTable(spectrum, point))


# -- one-dimensional quadrature at n = 1 ------------------------------------------

def _gauss_hermite_mean(func, sigma: float, tol: float = 1e-13) -> complex:
    """``E func(X)`` for ``X ~ N(0, sigma^2)``, doubling the node count to convergence."""
    prev = None
    for deg in (128, 256, 512, 1024, 2048):
        x, w = special.roots_hermite(deg)
        val = complex(np.sum(w * func(np.sqrt(2.0) * sigma * x)) / np.sqrt(np.pi))
        if prev is not None and abs(val - prev) < tol:
            return val
        prev = val
    return prev


def _half_line_mean(func, log_density) -> complex:
    def part(fn):
        # quad flags roundoff once it reaches ~1e-17; the value is still good
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", integrate.IntegrationWarning)
            return integrate.quad(lambda u: fn(u) * math.exp(log_density(u)), 0, math.inf,
                                  epsabs=1e-14, epsrel=1e-12, limit=400)[0]
    re = part(lambda u: np.real(func(np.array([u])))[0])
    im = part(lambda u: np.imag(func(np.array([u])))[0])
    return complex(re, im)


def _n1_mean(kind: EnsembleKind, func, nu: int = 0) -> complex:
    """``E func(lambda)`` for the single eigenvalue of a ``1 x 1`` sample.

    GOE: one ``N(0, 2)`` entry (Gauss-Hermite); GUE: one ``N(0, 1)`` entry;
    Wishart real: ``lambda ~ chi^2(nu + 1)`` integrated in ``u = sqrt(lambda)``;
    Wishart complex: ``lambda ~ Gamma(nu + 1, 1)``.
    """
    if kind is EnsembleKind.GOE:
        return _gauss_hermite_mean(func, math.sqrt(2.0))
    if kind is EnsembleKind.GUE:
        return _gauss_hermite_mean(func, 1.0)
    if kind is EnsembleKind.WISHART_REAL:
        k = nu + 1
        log_norm = (k / 2.0) * math.log(2.0) + special.gammaln(k / 2.0)

        def log_density(u):
            # u = sqrt(lambda): 2 u^(k-1) e^(-u^2/2) / (2^(k/2) Gamma(k/2))
            if k == 1:
                return math.log(2.0) - u * u / 2 - log_norm
            return math.log(2.0) + (k - 1) * math.log(u) - u * u / 2 - log_norm if u > 0 else -math.inf

        return _half_line_mean(lambda u: func(u * u), log_density)
    if kind is EnsembleKind.WISHART_COMPLEX:
        def log_gamma_density(x):
            if nu == 0:
                return -x
            return nu * math.log(x) - x - special.gammaln(nu + 1) if x > 0 else -math.inf

        return _half_line_mean(func, log_gamma_density)
    raise ConfigurationError(f"no n=1 quadrature for {kind.value}")


def _n1_table(kind: EnsembleKind, point: EvaluationPoint, nu: int, lam) -> ObservableTable:
    lam = np.asarray(lam, dtype=float).reshape(-1, 1)
    sp = hard_edge_points(lam, 1, nu) if kind.is_wishart else soft_edge_points(lam, 1)
    return ObservableTable(sp, point)


def n1_expectation(theorem: TheoremId, K: MultiIndex, point: EvaluationPoint,
                   nu: int = 0, form: str = "derived") -> complex:
    """Exact expectation of the residual for ``n = 1`` by one-dimensional quadrature."""
    theorem = TheoremId(theorem)
    kind = theorem.kind
    spec = EnsembleSpec(kind, 1, nu=nu if kind.is_wishart else None)
    terms = residual_terms(theorem, K, point, 1, spec.nu, form)
    return _n1_mean(kind, lambda lam: _evaluate(terms, _n1_table(kind, point, spec.nu, lam)),
                    spec.nu or 0)


def n1_moment(kind: EnsembleKind, K: MultiIndex, point: EvaluationPoint, nu: int = 0) -> complex:
    """Joint moment ``m_K`` at ``n = 1`` by quadrature."""
    kind = EnsembleKind(kind)
    spec = EnsembleSpec(kind, 1, nu=nu if kind.is_wishart else None)
    return _n1_mean(kind, lambda lam: _n1_table(kind, point, spec.nu, lam).product(K),
                    spec.nu or 0)


_ADMISSION_TOL = 1e-6


@functools.lru_cache(maxsize=None)
def admit_derived(theorem: TheoremId) -> bool:
    """Gate for the derived exact identities: the ``n = 1`` expectation must vanish.

    Checked by quadrature on a small grid of multi-indices and points; raises
    if any cell exceeds ``1e-6``.
    """
    theorem = TheoremId(theorem)
    if not theorem.derived:
        return True
    Ks = [MultiIndex()] if theorem.is_boundary else [_e(1), _e(2), MultiIndex.of(1, 1), _e(1, 2)]
    for K in Ks:
        for z in DEFAULT_SOFT_POINTS:
            val = n1_expectation(theorem, K, EvaluationPoint.soft(z))
            if not abs(val) <= _ADMISSION_TOL:
                raise ConfigurationError(
                    f"{theorem.value} fails the n=1 quadrature gate at K={K}, z={z}: {val}")
    return True


# -- Monte Carlo verification -------------------------------------------------------

@dataclass(frozen=True)
class RecursionReport:
    theorem: TheoremId
    K: MultiIndex
    spec: EnsembleSpec
    point: EvaluationPoint
    samples: int
    residual: MomentEstimate
    z_score_real: float
    z_score_imag: float
    verdict: str
    form: str = "derived"
    sampler: str = "dense"

    def row(self) -> dict:
        r = self.residual
        return {
            "theorem": self.theorem.value,
            "K": str(self.K),
            "n": self.spec.n,
            "nu": "" if self.spec.nu is None else self.spec.nu,
            "point": self.point.label,
            "samples": self.samples,
            "residual_re": r.mean.real,
            "residual_im": r.mean.imag,
            "stderr_re": r.stderr_re,
            "stderr_im": r.stderr_im,
            "z_re": self.z_score_real,
            "z_im": self.z_score_imag,
            "verdict": self.verdict,
        }


def _verdict(theorem: TheoremId, est: MomentEstimate) -> str:
    if not theorem.exact:
        return "scaling-only"
    return "pass" if max(abs(est.z_re), abs(est.z_im)) <= PASS_THRESHOLD else "fail"


@dataclass(frozen=True)
class _Cell:
    theorem: TheoremId
    K: MultiIndex
    point: EvaluationPoint


def _cells_chunk(task):
    spec, seed, start, stop, cells, sampler, form, extras = task
    lam = spectra_block(spec, seed, start, stop, sampler)
    sp = edge_spectrum(spec, lam)
    tables = {}
    accs = []
    for cell in cells:
        table = tables.setdefault(cell.point, ObservableTable(sp, cell.point))
        terms = residual_terms(cell.theorem, cell.K, cell.point, spec.n, spec.nu, form)
        accs.append(MomentAccumulator().add_many(_evaluate(terms, table)))
    for point, J in extras:
        table = tables.setdefault(point, ObservableTable(sp, point))
        accs.append(MomentAccumulator().add_many(table.product(J)))
    return accs


def _run_cells(spec, cells, sample_count, master_seed, workers, sampler, form, extras=()):
    size = chunk_size(spec, sampler)
    tasks = [(spec, master_seed, a, b, tuple(cells), sampler, form, tuple(extras))
             for a, b in chunk_bounds(sample_count, size)]
    results = run_chunks(_cells_chunk, tasks, workers)
    totals = [MomentAccumulator() for _ in range(len(cells) + len(extras))]
    for accs in results:
        totals = [merge(a, b) for a, b in zip(totals, accs)]
    return totals


def verify_cells(spec: EnsembleSpec, cells: Sequence[tuple], sample_count: int, master_seed: int,
                 workers: int = 1, sampler: str = "dense", form: str = "derived") -> List[RecursionReport]:
    """Run several ``(theorem, K, point)`` cells on one shared set of spectra.

    Sample ``i`` always comes from the stream ``(master_seed, i)``, so the
    result does not depend on ``workers``.
    """
    if sample_count < 100:
        raise ConfigurationError("verification needs at least 100 samples")
    parsed = []
    for theorem, K, point in cells:
        theorem = TheoremId(theorem)
        _check_spec(theorem, spec)
        residual_terms(theorem, K, point, spec.n, spec.nu, form)  # validates the cell
        if theorem.derived:
            admit_derived(theorem)
        parsed.append(_Cell(theorem, K, point))
    totals = _run_cells(spec, parsed, sample_count, master_seed, workers, sampler, form)
    reports = []
    for cell, acc in zip(parsed, totals):
        est = acc.estimate()
        reports.append(RecursionReport(cell.theorem, cell.K, spec, cell.point, sample_count, est,
                                       est.z_re, est.z_im, _verdict(cell.theorem, est), form, sampler))
    return reports


def verify(theorem: TheoremId, K: MultiIndex, spec: EnsembleSpec, point: EvaluationPoint,
           sample_count: int, master_seed: int, workers: int = 1, sampler: str = "dense",
           form: str = "derived") -> RecursionReport:
    """Monte Carlo check of one identity cell."""
    return verify_cells(spec, [(theorem, K, point)], sample_count, master_seed,
                        workers, sampler, form)[0]


# -- scaling studies for leading-order identities ----------------------------------------

@dataclass(frozen=True)
class ScalingRow:
    n: int
    samples: int
    residual: MomentEstimate
    centered_mean: MomentEstimate  # (E Tr G + n) / n^(2/3)
    predicted: complex  # z n^(-1/3) m_{K+e1}, the exact mean of the residual


@dataclass(frozen=True)
class ScalingReport:
    theorem: TheoremId
    K: MultiIndex
    point: EvaluationPoint
    rows: List[ScalingRow]
    exponent: float
    intercept: float
    monotone: bool
    centered_bounded: bool
    verdict: str
    notes: List[str] = field(default_factory=list)


def _check_grid(n_grid: Sequence[int]):
    if len(n_grid) < 4:
        raise ConfigurationError("scaling study needs at least 4 grid points")
    ratios = [b / a for a, b in zip(n_grid, n_grid[1:])]
    if any(r <= 1 for r in ratios) or max(ratios) - min(ratios) > 1e-9 * max(ratios):
        raise ConfigurationError(f"n grid must be increasing and geometric: {list(n_grid)}")


def scaling_study(theorem: TheoremId, K: MultiIndex, point: EvaluationPoint, n_grid: Sequence[int],
                  sample_counts, master_seed: int, workers: int = 1,
                  sampler: str = "banded") -> ScalingReport:
    """Decay of ``|E residual|`` across a geometric grid of ``n``.

    Fits ``log|E r| = a + b log n`` by least squares.  Verdict ``pass`` needs
    monotone decrease, ``b <= -0.15`` and ``|(E Tr G + n) / n^(2/3)|`` within
    ``MATOZH_BOUND`` at every ``n``; ``inconclusive`` when the residual is
    within two standard errors of zero at every ``n``.
    """
    theorem = TheoremId(theorem)
    if theorem.exact:
        raise ConfigurationError("scaling study is undefined for exact identities")
    n_grid = [int(n) for n in n_grid]
    _check_grid(n_grid)
    if isinstance(sample_counts, (int, np.integer)):
        sample_counts = [int(sample_counts)] * len(n_grid)
    if len(sample_counts) != len(n_grid):
        raise ConfigurationError("one sample count per grid point")
    z = point.z
    rows = []
    for n, count in zip(n_grid, sample_counts):
        spec = EnsembleSpec(theorem.kind, n)
        if count < 100:
            raise ConfigurationError("scaling study needs at least 100 samples per n")
        extras = [(point, _e(1)), (point, K + _e(1))]
        res, cen, nxt = _run_cells(spec, [_Cell(theorem, K, point)], count, master_seed,
                                   workers, sampler, "derived", extras)
        nxt_est = nxt.estimate()
        rows.append(ScalingRow(n, count, res.estimate(), cen.estimate(),
                               z * n ** (-1.0 / 3.0) * nxt_est.mean))

    mags = np.array([abs(r.residual.mean) for r in rows])
    ses = np.array([r.residual.stderr for r in rows])
    notes = []
    coef = np.polyfit(np.log(n_grid), np.log(np.maximum(mags, 1e-300)), 1)
    exponent, intercept = float(coef[0]), float(coef[1])
    monotone = bool(np.all(np.diff(mags) < 0))
    bounded = all(abs(r.centered_mean.mean) <= MATOZH_BOUND for r in rows)
    if np.all(mags <= 2 * ses):
        verdict = "inconclusive"
        notes.append("residual indistinguishable from zero at every n; increase samples")
    elif monotone and exponent <= -0.15 and bounded:
        verdict = "pass"
    else:
        verdict = "fail"
    return ScalingReport(theorem, K, point, rows, exponent, intercept, monotone, bounded,
                         verdict, notes)
