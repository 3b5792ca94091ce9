"""
Closed-form active-set solver for the two-variable unit-box QP

    minimize    1/2 x'Px + c'x
    subject to  0 <= x <= 1,   i.e.  G = [I; -I], h = (1, 1, 0, 0)

The minimizer is the unconstrained one when it lies in the box, and
otherwise one of four edge minimizers or four corners.
"""

import logging

import numpy as np

from core.conf import get_setting
from core.exceptions import DegenerateProblemError

from .types import QPData, QPSolution, kkt_error

logger = logging.getLogger(__name__)

BOX_G = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]])
BOX_H = np.array([1.0, 1.0, 0.0, 0.0])

# Dead zone of the dual recovery
DUAL_EPS = 1e-12

# Slack allowed when deciding whether a candidate lies in the box
FEASIBILITY_TOL = 1e-12


def box_qp(P, c):
    """QPData of the unit-box problem."""
    return QPData(P=P, c=c, G=BOX_G, h=BOX_H)


def _in_box(x):
    return bool(np.all(x >= -FEASIBILITY_TOL) and np.all(x <= 1.0 + FEASIBILITY_TOL))


def _cost(P, c, x):
    return 0.5 * x @ P @ x + c @ x


def recover_duals(x, P, c):
    """
    Multipliers of the box constraints at an optimal primal point

    With y = -Px - c, positive entries of y are carried by the upper bounds
    (lam_1, lam_2) and negative entries by the lower bounds (lam_3, lam_4);
    entries within DUAL_EPS of zero give zero multipliers.

    Returns:
        np.ndarray: lam of length 4
    """
    x = np.asarray(x, dtype=float)
    P = np.asarray(P, dtype=float)
    c = np.asarray(c, dtype=float)
    y = -P @ x - c

    lam = np.zeros(4)
    if y[0] >= DUAL_EPS:
        lam[0] = y[0]
    if y[1] >= DUAL_EPS:
        lam[1] = y[1]
    if y[0] <= -DUAL_EPS:
        lam[2] = -y[0]
    if y[1] <= -DUAL_EPS:
        lam[3] = -y[1]
    return lam


def active_set_2d(P, c):
    """
    Solve the unit-box QP exactly

    Args:
        P: 2x2 symmetric positive definite matrix
        c: Linear cost, length 2

    Returns:
        tuple: (x, lam)

    Raises:
        DegenerateProblemError: If P is singular within the pivot tolerance
            (parallel capsule axes); callers fall back to pdip_solve
    """
    P = np.asarray(P, dtype=float)
    c = np.asarray(c, dtype=float)
    p1, p2, p3 = P[0, 0], P[0, 1], P[1, 1]

    pivot_tol = get_setting('DIFFPROX_ACTIVE_SET_PIVOT_TOL', 1e-11)
    det = p1 * p3 - p2 * p2
    if p1 < pivot_tol or p3 < pivot_tol or det < pivot_tol * max(1.0, p1 * p3):
        raise DegenerateProblemError(
            f'Box QP cost matrix is singular (P11={p1:.3e}, P22={p3:.3e}, det={det:.3e})'
        )

    x = np.array([p2 * c[1] - p3 * c[0], p2 * c[0] - p1 * c[1]]) / det
    if _in_box(x):
        return np.clip(x, 0.0, 1.0), np.zeros(4)

    candidates = (
        (1.0, -(p2 + c[1]) / p3),
        (0.0, -c[1] / p3),
        (-(p2 + c[0]) / p1, 1.0),
        (-c[0] / p1, 0.0),
        (0.0, 0.0),
        (0.0, 1.0),
        (1.0, 0.0),
        (1.0, 1.0),
    )

    best, best_cost = None, np.inf
    for candidate in candidates:
        candidate = np.array(candidate)
        if not _in_box(candidate):
            continue
        candidate = np.clip(candidate, 0.0, 1.0)
        cost = _cost(P, c, candidate)
        # Strict comparison keeps the lowest index on ties
        if cost < best_cost:
            best, best_cost = candidate, cost

    return best, recover_duals(best, P, c)


def solve_box_qp(data):
    """
    Solve unit-box QPData with active_set_2d and package a QPSolution

    Raises:
        DegenerateProblemError: As active_set_2d
    """
    x, lam = active_set_2d(data.P, data.c)
    s = np.maximum(data.h - data.G @ x, 0.0)
    sol = QPSolution(x=x, s=s, lam=lam, iterations=0, kkt_residual=0.0, solver='active_set')
    return QPSolution(
        x=x, s=s, lam=lam,
        iterations=0,
        kkt_residual=kkt_error(data, sol),
        solver='active_set',
    )
