"""
Leading-order identities and their decay in n
=============================================

The GOE and GUE recursions hold only up to corrections that vanish as n
grows, so a single n cannot confirm them.  Instead we fit the decay of
the residual mean across a geometric grid.
"""

from rmtedge import EnsembleKind, EnsembleSpec, EvaluationPoint, MultiIndex, TheoremId, scaling_study, verify

z = EvaluationPoint.soft(1j)

# the exact boundary identity can be checked at any fixed n
print(verify(TheoremId.GOE_BOUNDARY_EXACT, MultiIndex(), EnsembleSpec(EnsembleKind.GOE, 8), z,
             50_000, 3).row())

# a leading-order identity only gets a scaling verdict
rep = scaling_study(TheoremId.GOE_BOUNDARY_LEADING, MultiIndex(), z, [32, 64, 128, 256],
                    sample_counts=4000, master_seed=4)
for row in rep.rows:
    print(f"n={row.n:4d}  |E r| = {abs(row.residual.mean):.4f} +- {row.residual.stderr:.4f}"
          f"  centered mean {row.centered_mean.mean:.3f}")
print(f"fitted exponent {rep.exponent:.3f}, verdict {rep.verdict}")
