"""Edge statistics of Gaussian and Wishart random matrices and their moment recursions."""
from .ensembles import (ConfigurationError, EnsembleKind, EnsembleSpec, EntryLaw, fast_equivalent_sample,
                        sample_ensemble)
from .spectra import Edge, EdgeSpectrum, NumericalError, edge_spectrum, spectra_block, spectrum
from .statistics import (DomainError, EvaluationPoint, MomentAccumulator, MomentEstimate, MultiIndex,
                         g_hard, g_soft, g_soft_centered, merge, product_observable, truncation_sensitivity)
from .recursions import (TheoremId, n1_expectation, n1_moment, residual_terms, scaling_study, verify,
                         verify_cells)
from .decoupling import (Symmetry, decoupling_quadrature_n1, derivative_matrix, finite_difference_derivative,
                         gaussian_decoupling_check, resolvent, trace_power_derivative,
                         truncated_expansion_residual)
from .kernels import (airy_ai, airy_ai_prime, airy_kernel, bessel_j, bessel_kernel, mp_density,
                      semicircle_density)

__version__ = "0.1.0"
