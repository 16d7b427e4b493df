"""
Sampling ensembles and rescaling at the edges
=============================================

Draw GOE and Wishart spectra, zoom into the largest (soft edge) and
smallest (hard edge) eigenvalues, and evaluate the resolvent-trace
statistics built from them.
"""

import numpy as np

from rmtedge import (EnsembleKind, EnsembleSpec, EvaluationPoint, MultiIndex, edge_spectrum, g_hard,
                     g_soft, g_soft_centered, product_observable, sample_ensemble, semicircle_density,
                     spectra_block, spectrum)

# a single GOE matrix; seed and index fix it completely
spec = EnsembleSpec(EnsembleKind.GOE, 200)
sample = sample_ensemble(spec, 2024, 0)
lam = spectrum(sample)
print("largest eigenvalues:", lam[-3:])

# soft-edge points are (lambda - 2) n^(2/3), largest first
soft = edge_spectrum(spec, lam)
print("top soft-edge points:", soft.xi[:3])

# statistics of the rescaled points at z = i
z = 1j
print("g_1 =", g_soft(soft, 1, z))
print("g_2 =", g_soft(soft, 2, z))
print("centered g =", g_soft_centered(soft, z))

# the product observable for K = (1, 1): centered g times g_2
print("P_(1,1) =", product_observable(soft, MultiIndex.of(1, 1), EvaluationPoint.soft(z)))

######################################################################
# Many samples at once and the semicircle
# ---------------------------------------

block = spectra_block(EnsembleSpec(EnsembleKind.GOE, 256), 7, 0, 50)
counts, edges = np.histogram(block.ravel(), bins=20, range=(-2, 2), density=True)
mid = 0.5 * (edges[1:] + edges[:-1])
for x, h in zip(mid[::4], counts[::4]):
    print(f"x={x:+.2f}  histogram {h:.3f}  semicircle {semicircle_density(x):.3f}")

######################################################################
# Hard edge of a square Wishart matrix
# ------------------------------------

wspec = EnsembleSpec(EnsembleKind.WISHART_REAL, 100, nu=0)
hard = edge_spectrum(wspec, spectrum(sample_ensemble(wspec, 3, 0)))
print("smallest hard-edge points:", hard.xi[:3])
for t in (0.5, 1.0, 2.0):
    print(f"g_1(t={t}) = {g_hard(hard, 1, t):.4f}")
