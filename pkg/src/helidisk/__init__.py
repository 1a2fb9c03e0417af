"""Helicity-type invariants of time-periodic Hamiltonian flows on a disk.

The package computes the solid-torus helicity integral of a disk-invariant
Hamiltonian system, its Calabi and generalized-Calabi variants, the lattice
quantization of helicity across flows sharing one period map, constructive
smooth companions with shifted helicity, and a Monte-Carlo estimate of the
asymptotic pairwise linking of trajectories.
"""

from .errors import (
    BoundaryGradientError,
    BoundaryInhomogeneityError,
    BoundaryNotInvariantError,
    CurveProximityError,
    DiskEscapeError,
    FieldDomainError,
    FieldSpecError,
    HelidiskError,
    MapMismatchError,
    ProjectionDegeneracyError,
    RotationTrackingError,
    SolverConvergenceError,
)
from .geometry import (
    ActionAngle,
    Disk,
    ExtendedPoint,
    PhasePoint,
    disk_area,
    from_action_angle,
    to_action_angle,
)
from .fields import (
    HamiltonianField,
    NormalizedField,
    TimeReparametrization,
    add_time_function,
    annulus_cap,
    lemma1_extension,
    linear_rotation,
    normalize,
    poly_twist,
    reparam_c1,
    reparam_c3,
    reparam_identity,
    reparametrize,
    rotate_coordinates,
    scale_field,
    theorem2_piecewise,
    twist_field,
    zero_field,
)
from .flow import (
    IntegratorConfig,
    PoincareMap,
    Trajectory,
    boundary_rotation_number,
    disk_samples,
    integrate,
    map_distance,
    map_jacobian_determinant,
    poincare_apply,
)
from .invariants import (
    HelicityResult,
    QuadratureGrid,
    QuantizationReport,
    calabi,
    form_helicity,
    generalized_calabi,
    helicity,
    quantization_check,
)
from .constructor import smoothness_order, theorem2_pair
from .linking import (
    ORIENTATION_SIGN,
    ClosedCurve,
    LinkingEstimate,
    asymptotic_linking,
    close_trajectory,
    linking_number,
)

__version__ = "0.1.0"
