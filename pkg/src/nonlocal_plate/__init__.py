"""Nonlocal Laplacian and biharmonic operators with singular compactly supported kernels.

Grid discretizations, collar-constrained Poisson, hinged and clamped solvers and
convergence studies against classical manufactured solutions.
"""

from .errors import (ConfigurationError, KernelDomainError, NonlocalError, QuadratureError,
                     SingularityError, SolverError)
from .geometry import (Disk, Discretization, Rectangle, RegionLabel, build_grid, classify,
                       unit_disk, unit_square)
from .kernel import Family, KernelSpec, c_delta, kernel_scalars, mass, mu, pi_of, rho
from .operators import NonlocalOperator, apply, apply_biharmonic, assemble_laplacian
from .solver import (SolveReport, estimate_coercivity, solve_clamped, solve_hinged_monolithic,
                     solve_hinged_split, solve_poisson)

__version__ = "0.1.0"
