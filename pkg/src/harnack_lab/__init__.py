"""harnack_lab: admissible-cone computations, spectral reaction-diffusion
solves on flat tori, and numerical certification of matrix Harnack-type
inequalities."""

from .cone import (
    AdmissibilityReport,
    ConeFamilyPoint,
    Quintuple,
    cone_table,
    default_boundary_tol,
    depressed_cubic_roots,
    epsilon_of,
    exponent_gap,
    family_cubic,
    family_cubic_dz,
    family_z_interval,
    format_cone_csv,
    gap_linear,
    gap_quadratic,
    in_harnack_subcone,
    is_admissible,
    k0_threshold,
    k1_threshold,
    k_threshold,
    quartic_margin,
    ridge_gap,
    ridge_z,
    search_max_gap,
    write_cone_csv,
)
from .config import RunConfig, bundled_config_path, initial_field, load_config
from .fields import (
    DerivedFields,
    FieldCache,
    derive,
    evolution_residual,
    harnack_tensor,
    source_tensor,
)
from .grid import (
    Grid,
    ScalarField,
    TensorField,
    read_snapshot,
    read_tensor_snapshot,
    write_snapshot,
    write_tensor_snapshot,
)
from .solver import (
    GuardTrip,
    Trajectory,
    ode_blowup_time,
    read_trajectory,
    solve,
    step,
    write_trajectory,
)
from .verifier import (
    ConfigurationError,
    MarginReport,
    PathQuery,
    psi_path,
    verify_claim,
    verify_harnack_pair,
    verify_matrix,
    verify_trace,
)

__version__ = "0.1.0"
