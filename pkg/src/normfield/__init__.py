"""Radial bound states of scalar field equations with prescribed mass.

The package computes ground and excited states of the constrained problem
(minimize the action over the sphere of fixed squared L2 norm), exposes the
associated energy functionals and their exact discrete differentials,
locates mountain-pass levels by two independent routes, traces threshold
curves in the mass parameter, and cross-checks the variational identities
that characterize the solutions.

Entry points: the :mod:`normfield.cli` command surface, or the library API
re-exported here.
"""

from .energy import (
    AugmentedPoint,
    Differential,
    EnergyReport,
    PSPResidual,
    Tangent,
    diagnose_psp_sequence,
    differential,
    energies,
    metric_norm,
    omega_params,
    psp_residual,
)
from .errors import (
    ConditionViolationError,
    ConfigError,
    ConvergenceError,
    NormfieldError,
    TailUndeterminedError,
    TruncationError,
)
from .grid import (
    Profile,
    RadialGrid,
    dilate,
    grid_for_mu,
    load_profile,
    make_grid,
    norm,
    save_profile,
)
from .mass import (
    SolveReport,
    ThresholdCurve,
    minimize_on_sphere,
    solve_normalized,
    threshold_curve,
    verify_identities,
)
from .minimax import (
    DeformResult,
    StringResult,
    deform,
    dilation_energy_profile,
    mp_level_least_energy,
    mp_level_path,
)
from .nonlin import (
    CombinedPower,
    ConditionReport,
    Nonlinearity,
    PurePower,
    Saturating,
    Tabulated,
    classify,
    envelope_constant,
    lambda0,
    p_critical,
)
from .shoot import (
    BranchSample,
    branch,
    find_bound_state,
    least_energy_E0,
)

__version__ = "0.1.0"

__all__ = [
    "AugmentedPoint",
    "BranchSample",
    "CombinedPower",
    "ConditionReport",
    "ConditionViolationError",
    "ConfigError",
    "ConvergenceError",
    "DeformResult",
    "Differential",
    "EnergyReport",
    "Nonlinearity",
    "NormfieldError",
    "PSPResidual",
    "Profile",
    "PurePower",
    "RadialGrid",
    "Saturating",
    "SolveReport",
    "StringResult",
    "Tabulated",
    "TailUndeterminedError",
    "Tangent",
    "ThresholdCurve",
    "TruncationError",
    "branch",
    "classify",
    "deform",
    "diagnose_psp_sequence",
    "differential",
    "dilate",
    "dilation_energy_profile",
    "energies",
    "envelope_constant",
    "find_bound_state",
    "grid_for_mu",
    "lambda0",
    "least_energy_E0",
    "load_profile",
    "make_grid",
    "metric_norm",
    "minimize_on_sphere",
    "mp_level_least_energy",
    "mp_level_path",
    "norm",
    "omega_params",
    "p_critical",
    "psp_residual",
    "save_profile",
    "solve_normalized",
    "threshold_curve",
    "verify_identities",
    "__version__",
]
