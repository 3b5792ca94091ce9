"""
Exception hierarchy for numerical failures.

Input problems are reported with django.core.exceptions.ValidationError
(see core.utils.validators); everything that goes wrong inside a solve,
a backward pass or a planning run derives from DiffProxError.
"""


class DiffProxError(Exception):
    """Base class for solver, differentiation and planning failures."""


class FactorizationError(DiffProxError):
    """Cholesky factorization hit a non-positive pivot."""

    def __init__(self, pivot_index, pivot=None):
        self.pivot_index = pivot_index
        self.pivot = pivot
        detail = f' (pivot {pivot:.3e})' if pivot is not None else ''
        super().__init__(f'Cholesky factorization failed at pivot {pivot_index}{detail}')


class NonConvergenceError(DiffProxError):
    """The interior-point solver reached its iteration cap."""

    def __init__(self, best, residuals, iterations):
        self.best = best
        self.residuals = residuals
        self.iterations = iterations
        stat, prim, mu = residuals
        super().__init__(
            f'Interior-point solver did not converge in {iterations} iterations '
            f'(stationarity {stat:.3e}, primal {prim:.3e}, mu {mu:.3e})'
        )


class DegenerateProblemError(DiffProxError):
    """The two-variable active-set solver met a singular cost matrix."""


class NondifferentiablePointError(DiffProxError):
    """The backward system is singular at the given solution."""

    def __init__(self, message, index=None):
        self.index = index
        super().__init__(message)


class InvalidStateError(DiffProxError):
    """A car state lies outside the domain of the dynamics."""


class PlanningFailureError(DiffProxError):
    """The planner exhausted its iteration budget."""

    def __init__(self, message, trajectory=None):
        self.trajectory = trajectory
        super().__init__(message)
