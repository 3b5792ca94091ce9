"""
Backward pass through the QP solution map.

For a scalar loss l(x*) the gradients with respect to every problem
datum follow from one linear solve with the transposed Jacobian of the
stationarity and complementarity conditions:

    [ P   G'D(lam) ] [d_x  ]      [ dl/dx ]
    [ G   D(Gx-h)  ] [d_lam]  = - [   0   ]

    dl/dP = 1/2 (d_x x' + x d_x'),   dl/dG = D(lam) d_lam x' + lam d_x',
    dl/dc = d_x,                     dl/dh = -D(lam) d_lam
"""

import logging
from dataclasses import dataclass

import numpy as np
import scipy.linalg
from django.core.exceptions import ValidationError

from core.conf import get_setting
from core.exceptions import NondifferentiablePointError

from .types import kkt_error

logger = logging.getLogger(__name__)

# Forward solutions must certify KKT to this level before differentiation
KKT_TOL = 1e-8

# Below this complementarity gap the backward system is regularized
NEAR_DEGENERATE = 1e-6


@dataclass(frozen=True, eq=False)
class BackwardGrads:
    """Gradients of a scalar loss with respect to P, G, c and h."""

    dP: np.ndarray
    dG: np.ndarray
    dc: np.ndarray
    dh: np.ndarray


def _complementary_pair(sol):
    """
    Split each constraint into active (s = 0) or inactive (lam = 0)

    The larger of (lam_j, s_j) decides; the smaller is set to zero so the
    backward system matches the exact complementary solution.
    """
    active = sol.lam > sol.s
    lam = np.where(active, sol.lam, 0.0)
    s = np.where(active, 0.0, sol.s)
    return lam, s


def qp_backward(data, sol, dl_dx):
    """
    Gradients of l with respect to the QP data at a solution

    Args:
        data: QPData
        sol: QPSolution satisfying the KKT conditions of data within 1e-8
        dl_dx: Gradient of the loss with respect to the primal solution

    Returns:
        BackwardGrads

    Raises:
        ValidationError: If sol does not solve data or dl_dx is not finite
        NondifferentiablePointError: If a constraint is weakly active or the
            backward system is singular (non-unique primal solution)
    """
    dl_dx = np.asarray(dl_dx, dtype=float).reshape(-1)
    if dl_dx.shape != (data.n,) or not np.all(np.isfinite(dl_dx)):
        raise ValidationError(f'dl_dx must be a finite vector of length {data.n}')

    error = kkt_error(data, sol)
    if error > KKT_TOL:
        raise ValidationError(f'Solution does not satisfy the KKT conditions (error {error:.3e})')

    n, l = data.n, data.l
    P, G = data.P, data.G
    x = sol.x
    lam, s = _complementary_pair(sol)

    gap = np.maximum(sol.lam, sol.s)
    weak_tol = get_setting('DIFFPROX_WEAK_ACTIVITY_TOL', 1e-9)
    weak = np.flatnonzero(gap <= weak_tol)
    if weak.size:
        index = int(weak[0])
        raise NondifferentiablePointError(
            f'Constraint {index} is weakly active (lam={sol.lam[index]:.3e}, s={sol.s[index]:.3e})',
            index=index,
        )

    K = np.zeros((n + l, n + l))
    K[:n, :n] = P
    K[:n, n:] = G.T * lam
    K[n:, :n] = G
    K[n:, n:] = np.diag(-s)

    if np.min(gap) < NEAR_DEGENERATE:
        K += get_setting('DIFFPROX_BACKWARD_REGULARIZATION', 1e-12) * np.eye(n + l)

    rcond_floor = get_setting('DIFFPROX_BACKWARD_RCOND', 1e-12)
    if 1.0 / np.linalg.cond(K) < rcond_floor:
        raise NondifferentiablePointError(
            'Backward system is singular: the primal solution is not unique'
        )

    rhs = np.concatenate([-dl_dx, np.zeros(l)])
    lu, piv = scipy.linalg.lu_factor(K, check_finite=False)
    d = scipy.linalg.lu_solve((lu, piv), rhs, check_finite=False)
    d_x, d_lam = d[:n], d[n:]

    dP = 0.5 * (np.outer(d_x, x) + np.outer(x, d_x))
    dG = np.outer(lam * d_lam, x) + np.outer(lam, d_x)
    dc = d_x
    dh = -lam * d_lam

    return BackwardGrads(dP=dP, dG=dG, dc=dc, dh=dh)
