"""Pseudo-spectral toolkit for the modified dissipative quasi-geostrophic
equation on the periodic square."""

__version__ = "0.1.0"

from .grid import (
    FieldError,
    GridSpec,
    ScalarField,
    SpectralField,
    VectorField,
    forward_transform,
    inverse_transform,
)
from .littlewood_paley import (
    KEstimate,
    LPDecomposition,
    PartitionSpec,
    build_partition,
    chemin_lerner_norm,
    decompose,
    delta_q,
    existence_time_estimate,
    k_functional,
    s_q,
    sobolev_norm,
)
from .solver import (
    BlowupError,
    DiagnosticsRecord,
    SolverConfig,
    Trajectory,
    VelocityTrack,
    integrate,
    linear_advect_diffuse,
    picard_iterate,
    step,
)
from .spectral import (
    Variant,
    dealias,
    fractional_laplacian,
    nonlinear_term,
    nonlinear_term_oracle,
    riesz_perp_velocity,
    spectral_cutoff,
)
