"""Expected zero densities of random sums with complex Gaussian coefficients.

Direct kernel sums, Christoffel-Darboux closed forms for orthonormal
polynomials, the large-degree limit outside [-1, 1], and two independent
oracles (area versus contour quadrature, and Monte Carlo root counts).
"""
from .basis import (Basis, BasisEval, BasisKind, DegreeOutOfRangeError, chebyshev,
                    eval_basis, get_basis, hermite, leading_ratio, legendre,
                    load_basis_file, monomial)
from .intensity import (IntensityPath, IntensityValue, JoukowskiPoint, asymptotic_pn,
                        general_density, intensity_general, intensity_limit,
                        intensity_oprl, joukowski_xi, limit_density, oprl_density,
                        szego_function)
from .kernels import (KernelTriple, axis_threshold, cd_deriv_kernels, cd_diag,
                      cd_offdiag, kernel_direct)
from .montecarlo import (CoefficientSample, MCResult, RootSet, count_in_region,
                         find_roots, mc_density, mc_expectation, sample_coeffs)
from .quadrature import (Expectation, QuadConfig, Region, area_expectation,
                         contour_expectation, disk_polygon, parse_region)

__version__ = "0.1.0"
