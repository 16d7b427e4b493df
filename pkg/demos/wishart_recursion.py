"""
Checking an exact moment recursion by Monte Carlo
=================================================

The Wishart identities hold at every finite n, so the mean of the
residual observable must vanish.  Paired sampling (all terms from the
same spectra) keeps the standard error small.
"""

from rmtedge import (EnsembleKind, EnsembleSpec, EvaluationPoint, MultiIndex, TheoremId, n1_expectation,
                     residual_terms, verify, verify_cells)

K = MultiIndex.of(1)
t = EvaluationPoint.hard(1.0)

# the identity as a list of coefficient * product-observable terms
for term in residual_terms(TheoremId.WISHART_REAL, K, t, n=4, nu=1):
    print(f"{term.coefficient:+.4f} * P_{term.index}")

rep = verify(TheoremId.WISHART_REAL, K, EnsembleSpec(EnsembleKind.WISHART_REAL, 4, nu=1), t,
             sample_count=100_000, master_seed=1)
print(rep.row())

# for n = 1 the expectation is a one-dimensional integral
print("n=1 quadrature:", abs(n1_expectation(TheoremId.WISHART_REAL, K, EvaluationPoint.hard(0.5), nu=3)))

######################################################################
# Coefficient variants
# --------------------
#
# ``form="printed"`` keeps the commonly quoted coefficients.  Away from
# t = 1 they are not an identity and the z-score shows it.

spec = EnsembleSpec(EnsembleKind.WISHART_REAL, 4, nu=1)
half = EvaluationPoint.hard(0.5)
for form in ("derived", "printed"):
    r = verify(TheoremId.WISHART_REAL, K, spec, half, 20_000, 5, form=form)
    print(f"{form:8s} z = {r.z_score_real:+.2f}  {r.verdict}")

######################################################################
# Several cells on one set of spectra
# -----------------------------------

cells = [(TheoremId.WISHART_COMPLEX, MultiIndex.of(0, 1), EvaluationPoint.hard(2.0)),
         (TheoremId.WISHART_COMPLEX_BOUNDARY, MultiIndex(), EvaluationPoint.hard(2.0))]
for r in verify_cells(EnsembleSpec(EnsembleKind.WISHART_COMPLEX, 8, nu=3), cells, 50_000, 2):
    print(r.theorem.value, r.K, f"z = {r.z_score_real:+.2f}", r.verdict)
