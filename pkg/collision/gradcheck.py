"""
Comparison of analytic and finite-difference Jacobians.
"""

from dataclasses import dataclass

import numpy as np

from .detection import finite_diff_jacobians, proximity_jacobians

REL_TOL = 1e-4
ABS_TOL = 1e-8

COORDINATES = (
    [f'r1[{i}]' for i in range(3)]
    + [f'q1[{i}]' for i in range(4)]
    + [f'r2[{i}]' for i in range(3)]
    + [f'q2[{i}]' for i in range(4)]
)


@dataclass(frozen=True, eq=False)
class GradientCheck:
    analytic: np.ndarray
    numeric: np.ndarray
    abs_error: np.ndarray
    rel_error: np.ndarray
    passed: bool

    @property
    def max_abs_error(self):
        return float(np.max(self.abs_error))

    @property
    def max_rel_error(self):
        return float(np.max(self.rel_error))

    def coordinates(self):
        return [
            {
                'coordinate': name,
                'analytic': self.analytic[i],
                'numeric': self.numeric[i],
                'abs_error': self.abs_error[i],
                'rel_error': self.rel_error[i],
            }
            for i, name in enumerate(COORDINATES)
        ]


def compare(analytic, numeric, rel_tol=REL_TOL, abs_tol=ABS_TOL):
    """
    Entrywise comparison of two ProximityJacobians

    An entry passes when its absolute error is at most abs_tol or its error
    relative to the larger magnitude is at most rel_tol.
    """
    a = analytic.as_vector()
    f = numeric.as_vector()
    abs_error = np.abs(a - f)
    scale = np.maximum(np.abs(a), np.abs(f))
    rel_error = np.divide(abs_error, scale, out=np.zeros_like(abs_error), where=scale > 0.0)
    passed = bool(np.all((abs_error <= abs_tol) | (rel_error <= rel_tol)))
    return GradientCheck(a, f, abs_error, rel_error, passed)


def check_gradients(shape1, shape2, step=1e-6, rel_tol=REL_TOL, abs_tol=ABS_TOL):
    """Analytic Jacobians against central differences with the given step."""
    return compare(
        proximity_jacobians(shape1, shape2),
        finite_diff_jacobians(shape1, shape2, step),
        rel_tol=rel_tol,
        abs_tol=abs_tol,
    )
