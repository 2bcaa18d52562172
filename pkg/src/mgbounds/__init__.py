"""Two-grid and multigrid convergence bounds with inexact coarse solves.

Dense-matrix tools to build two-grid and multigrid cycles, compute their
energy-norm convergence factors exactly, and compare them with two-sided
spectral bounds.
"""

from .errors import (
    BadBracket,
    BadDimension,
    BadParameter,
    ConfigError,
    CrossCheckFailed,
    DegeneratePencil,
    MgBoundsError,
    NoConvergence,
    NonSymmetric,
    NontrivialCaseViolated,
    NotAConvergent,
    NotSpd,
    OutOfTheoryRange,
    SimilarityNotSymmetric,
    Singular,
)
from .hierarchy import (
    BlockPartition,
    Hierarchy,
    alpha_parameterized_example,
    build_hierarchy,
    galerkin,
    ideal_interpolation,
    laplacian_1d,
    laplacian_2d,
    linear_interpolation_1d,
    poisson_1d_hierarchy,
    poisson_2d_hierarchy,
)
from .multigrid import (
    Certification,
    corollary43_bounds,
    fixed_point_root,
    level_quantities,
    mg_cycle,
    mg_error_matrix,
    theorem42_certify,
)
from .smoothers import (
    Smoother,
    make_block_jacobi,
    make_gauss_seidel,
    make_smoother,
    make_weighted_jacobi,
)
from .twogrid import (
    BoundsReport,
    SpectralQuantities,
    TwoGridSetup,
    k_tg,
    notay_bound,
    theorem33_bounds,
)

__version__ = "0.1.0"
