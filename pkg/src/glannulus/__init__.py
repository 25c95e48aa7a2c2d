"""Ginzburg-Landau minimization with prescribed boundary degrees on annuli.

Capacity of the circular annulus and its thick/thin classification against
the critical value pi, constrained energy descent with exact boundary
degree 1, vortex diagnostics, and the linear spectral reduction whose mode
inequalities certify that the constrained quadratic lower bound exceeds
2 pi.
"""

from .errors import NumericalError, ValidationError
from .field import (
    BoundaryTrace,
    ComplexField,
    VortexRecord,
    boundary_identity_residual,
    degree_from_coefficients,
    energy,
    energy_gradient,
    field_inner,
    fourier_trace,
    gl_residual,
    load_field,
    phase_normalize,
    save_field,
    symmetrize,
    vortex_detect,
    winding_number,
)
from .geometry import (
    Annulus,
    CapacityReport,
    Thickness,
    capacity_closed_form,
    capacity_numeric,
    classify_capacity,
    equivalent_annulus,
)
from .minimizer import (
    MinimizeConfig,
    MinimizeResult,
    ScanRow,
    initial_field,
    kappa_scan,
    minimize,
    write_scan_csv,
)
from .spectral import (
    Certificate,
    FDecomposition,
    F_eval,
    ModeCoefficients,
    ModeParams,
    bvp_cross_check,
    bvp_richardson,
    certify_nonexistence,
    constrained_min,
    kappa0_search,
    linear_solve,
    mode_coefficients,
    mode_profile,
)

__all__ = [
    "Annulus",
    "BoundaryTrace",
    "CapacityReport",
    "Certificate",
    "ComplexField",
    "FDecomposition",
    "F_eval",
    "MinimizeConfig",
    "MinimizeResult",
    "ModeCoefficients",
    "ModeParams",
    "NumericalError",
    "ScanRow",
    "Thickness",
    "ValidationError",
    "VortexRecord",
    "boundary_identity_residual",
    "bvp_cross_check",
    "bvp_richardson",
    "capacity_closed_form",
    "capacity_numeric",
    "certify_nonexistence",
    "classify_capacity",
    "constrained_min",
    "degree_from_coefficients",
    "energy",
    "energy_gradient",
    "equivalent_annulus",
    "field_inner",
    "fourier_trace",
    "gl_residual",
    "initial_field",
    "kappa0_search",
    "kappa_scan",
    "linear_solve",
    "load_field",
    "minimize",
    "mode_coefficients",
    "mode_profile",
    "phase_normalize",
    "save_field",
    "symmetrize",
    "vortex_detect",
    "winding_number",
    "write_scan_csv",
]
