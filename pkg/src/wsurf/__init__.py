"""Numerical lab for space-like Weingarten surfaces in Minkowski 3-space.

Modules: core (geometry, natural charts), pde (canonical forms and solvers),
reconstruct (frame integration), verify (mesh checks), parallel (offset
surfaces), classify (linear relations to basic classes), io, cli.
"""

from .classify import (
    BasicClassDescriptor,
    LinearRelation,
    classify,
    euclidean_counterpart,
    family_pde,
    fractional_to_linear,
)
from .core import (
    InvariantGrid,
    NaturalChart,
    QuadratureResult,
    WeingartenPair,
    check_natural_parameters,
    compute_IJ,
    invariants_from_forms,
    invariants_from_nu,
    lemma_functions,
    lorentz_cross,
    metric_from_chart,
    minkowski_dot,
)
from .errors import *  # noqa: F401,F403
from .parallel import (
    check_parallel_natural,
    parallel_invariants,
    parallel_relation,
    parallel_surface,
    parallel_weingarten,
)
from .pde import (
    OperatorKind,
    PdeForm,
    SolverConfig,
    canonical_rhs,
    natural_pde_residual,
    operator_apply,
    solve_elliptic,
    solve_hyperbolic,
)
from .reconstruct import Frame, Mode, SurfaceGrid, check_compatibility, integrate_frame, path_independence
from .verify import verification_report

__version__ = "0.1.0"
