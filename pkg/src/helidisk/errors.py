"""Exception types shared across the package.

Everything numerical raises a subclass of HelidiskError so that front ends
(CLI, service) can map domain failures to one exit code / HTTP status.
"""


class HelidiskError(Exception):
    """Base class for all domain errors raised by this package."""


class FieldSpecError(HelidiskError):
    """A field mini-language string could not be parsed."""


class FieldDomainError(HelidiskError):
    """A field was evaluated outside its domain of definition."""


class BoundaryInhomogeneityError(HelidiskError):
    """The Hamiltonian varies along the boundary circle, so the disk is not
    invariant and boundary normalization is impossible."""


class BoundaryGradientError(HelidiskError):
    """The Hamiltonian gradient does not vanish on the boundary torus, which
    the Calabi invariant requires."""


class BoundaryNotInvariantError(HelidiskError):
    """A trajectory started on the boundary circle left it."""


class SolverConvergenceError(HelidiskError):
    """Newton iteration for an implicit integrator step failed to converge."""


class DiskEscapeError(HelidiskError):
    """A trajectory of a disk-invariant field drifted outside the disk."""


class RotationTrackingError(HelidiskError):
    """Angle unwrapping failed: per-step angle change exceeded pi/2."""


class MapMismatchError(HelidiskError):
    """Two fields fed to the quantization check generate different Poincare
    maps, so their helicity difference is not constrained to the lattice."""


class CurveProximityError(HelidiskError):
    """Two polylines approach closer than the disjointness tolerance, so the
    linking number is ill-defined numerically."""


class ProjectionDegeneracyError(HelidiskError):
    """No generic projection direction was found for crossing counting."""
