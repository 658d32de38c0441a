"""Exception types shared across the solvers."""


class GausscapError(Exception):
    """Base class for solver failures."""


class StageViolation(GausscapError):
    """A closed-form stage solution produced an infeasible eigenvalue."""


class NoConvergence(GausscapError):
    """Root finding or stage iteration failed to converge.

    Carries a free-form diagnostic message (bracket endpoints, residuals,
    iteration counts) to make failures debuggable from logs.
    """


class QuadratureFailure(GausscapError):
    """Composite quadrature did not reach the requested accuracy."""


class InfeasibleStart(GausscapError):
    """No feasible point exists for the requested constraint set."""
