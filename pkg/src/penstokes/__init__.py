"""Conditioning of the penalized Stokes system on uniform triangle meshes."""
from .mesh import StructuredMesh, build_mesh, refine_once
from .element import QuadratureRule, ReferenceElement, eval_basis, quadrature
from .assembly import (
    AssembledSystem,
    DofMap,
    InfeasibleDiscretization,
    assemble_load,
    assemble_matrices,
    assemble_system,
    build_dof_map,
    penalty_matrix,
)
from .sparse_linalg import (
    BandedCholesky,
    ConvergenceError,
    EigenEstimate,
    FactorizationError,
    SolveReport,
    extreme_eigenvalues,
    solve_spd,
)
from .conditioning import (
    ConditioningReport,
    adaptive_bounds,
    div_norm,
    estimates,
    fh_norm,
    kappa,
    kappa_eff,
    l2_norm,
)
from .harness import SweepConfig, SweepRecord, emit_tables, forcing, run_cell, run_sweep

__version__ = "0.1.0"
