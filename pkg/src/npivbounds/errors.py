"""Exception hierarchy shared across the package."""


class NpivBoundsError(Exception):
    """Base class for all package-specific errors."""


class InvalidConfigurationError(NpivBoundsError):
    """A parameter combination is structurally invalid (e.g. dimension < order)."""


class InvalidInputError(NpivBoundsError):
    """Input data is malformed (non-finite, wrong shape, degenerate)."""


class DomainError(InvalidInputError):
    """An evaluation point lies outside the basis domain; no extrapolation."""


class DegenerateDomainError(InvalidInputError):
    """Observed data span a single point; no interval to build on."""


class InfeasibleProblemError(NpivBoundsError):
    """A constrained problem has no feasible point."""


class EmptyIdentifiedSetError(InfeasibleProblemError):
    """The moment and shape constraints admit no function at all."""


class SingularDesignError(NpivBoundsError):
    """First-stage Gram matrix is numerically singular."""


class SolverFailureError(NpivBoundsError):
    """Numerical breakdown inside the LP solver, distinct from infeasibility."""


class DataFormatError(NpivBoundsError):
    """A data file does not match the documented schema."""
