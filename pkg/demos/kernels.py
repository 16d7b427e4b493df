"""
Airy and Bessel kernels
=======================

The limiting correlation kernels at the soft and hard edges, built on
self-contained Airy and Bessel routines.
"""

import numpy as np
from scipy import integrate

from rmtedge import airy_ai, airy_ai_prime, airy_kernel, bessel_j, bessel_kernel, mp_density

print("Ai(0) =", airy_ai(0.0), " Ai'(0) =", airy_ai_prime(0.0))
print("J_0(2.4048) =", bessel_j(0, 2.4048))

# the closed form against the integral of Ai(x+s) Ai(y+s); the tail past s = 25 is negligible
x, y = -1.0, 2.0
closed = airy_kernel(x, y)
integral, _ = integrate.quad(lambda s: airy_ai(x + s) * airy_ai(y + s), 0, 25, limit=200)
print(f"K_Ai(-1, 2): closed {closed:.12f}, integral {integral:.12f}")

# on the diagonal the kernel is a density of points
grid = np.linspace(-4, 2, 7)
print("K_Ai(x, x):", np.round(airy_kernel(grid, grid), 5))
print("K_Bessel(x, x), nu = 1:", np.round(bessel_kernel(1, grid + 5, grid + 5), 5))

# Marchenko-Pastur density for square Wishart matrices
print("MP density at 0.5, 2, 3.5:", mp_density(np.array([0.5, 2.0, 3.5])))
