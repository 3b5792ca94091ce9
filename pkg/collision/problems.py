"""
QP data for the closest-point problems between two primitives.

Every pair reduces to minimizing 1/2 |F z + e|^2 over a polyhedron, where
p1 - p2 = F z + e; dropping the constant 1/2 |e|^2 gives P = F'F and
c = F'e.
"""

import numpy as np
from django.core.exceptions import ValidationError

from core.utils.validators import validate_matrix, validate_vector
from qp.active_set import BOX_G, BOX_H
from qp.types import QPData


def _segment_axis(a, b, label):
    a = validate_vector(a, 3, f'{label} endpoint a')
    b = validate_vector(b, 3, f'{label} endpoint b')
    if np.array_equal(a, b):
        raise ValidationError(f'{label} endpoints coincide')
    return a, b


def _least_squares_qp(F, e, G, h):
    P = F.T @ F
    P = 0.5 * (P + P.T)
    return QPData(P=P, c=F.T @ e, G=G, h=h)


def capsule_capsule_qp(a1, b1, a2, b2):
    """
    Closest points of two segments, variables (theta1, theta2) in [0, 1]^2

    F = [(a1 - b1), (b2 - a2)], e = b1 - b2, G = [I; -I], h = (1, 1, 0, 0).

    Raises:
        ValidationError: If a segment has coincident endpoints
    """
    a1, b1 = _segment_axis(a1, b1, 'Capsule 1')
    a2, b2 = _segment_axis(a2, b2, 'Capsule 2')
    F = np.column_stack([a1 - b1, b2 - a2])
    return _least_squares_qp(F, b1 - b2, BOX_G, BOX_H)


def polygon_polygon_qp(r1, Q1, r2, Q2, C1, d1, C2, d2):
    """
    Closest points of two planar polygons, variables (y1, y2) in R^4

    F = [Q1, -Q2], e = r1 - r2, G = blockdiag(C1, C2), h = (d1, d2).
    """
    r1 = validate_vector(r1, 3, 'Polygon 1 position')
    r2 = validate_vector(r2, 3, 'Polygon 2 position')
    Q1 = validate_matrix(Q1, (3, 2), 'Polygon 1 basis')
    Q2 = validate_matrix(Q2, (3, 2), 'Polygon 2 basis')
    C1 = validate_matrix(C1, (None, 2), 'Polygon 1 normals')
    C2 = validate_matrix(C2, (None, 2), 'Polygon 2 normals')
    d1 = validate_vector(d1, C1.shape[0], 'Polygon 1 offsets')
    d2 = validate_vector(d2, C2.shape[0], 'Polygon 2 offsets')

    m1, m2 = C1.shape[0], C2.shape[0]
    G = np.zeros((m1 + m2, 4))
    G[:m1, :2] = C1
    G[m1:, 2:] = C2
    F = np.hstack([Q1, -Q2])
    return _least_squares_qp(F, r1 - r2, G, np.concatenate([d1, d2]))


def capsule_polygon_qp(a1, b1, r2, Q2, C2, d2):
    """
    Closest points of a segment and a planar polygon, variables (theta1, y2)

    F = [(a1 - b1), -Q2], e = b1 - r2, G = blockdiag([1; -1], C2),
    h = (1, 0, d2).

    Raises:
        ValidationError: If the segment has coincident endpoints
    """
    a1, b1 = _segment_axis(a1, b1, 'Capsule')
    r2 = validate_vector(r2, 3, 'Polygon position')
    Q2 = validate_matrix(Q2, (3, 2), 'Polygon basis')
    C2 = validate_matrix(C2, (None, 2), 'Polygon normals')
    d2 = validate_vector(d2, C2.shape[0], 'Polygon offsets')

    m2 = C2.shape[0]
    G = np.zeros((2 + m2, 3))
    G[0, 0] = 1.0
    G[1, 0] = -1.0
    G[2:, 1:] = C2
    F = np.column_stack([a1 - b1, -Q2])
    return _least_squares_qp(F, b1 - r2, G, np.concatenate([[1.0, 0.0], d2]))
