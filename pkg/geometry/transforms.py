"""
Quaternion and frame utilities.

Convention: scalar-first Hamilton quaternions q = (w, x, y, z); the rotation
matrix maps body-frame vectors into the world frame, v_W = Q(q) v_B.
"""

import numpy as np

from core.utils.validators import validate_positive, validate_unit_quaternion


def rotation_matrix(q):
    """
    Rotation matrix of a quaternion, evaluated without a norm check.

    The entries are the homogeneous quadratic polynomials of (w, x, y, z)
    that equal the rotation matrix on the unit sphere. Off the sphere the
    result is a scaled rotation; the analytic Jacobians and the ambient
    finite differences are both taken of this polynomial.
    """
    w, x, y, z = np.asarray(q, dtype=float)
    return np.array([
        [w*w + x*x - y*y - z*z, 2.0*(x*y - w*z), 2.0*(x*z + w*y)],
        [2.0*(x*y + w*z), w*w - x*x + y*y - z*z, 2.0*(y*z - w*x)],
        [2.0*(x*z - w*y), 2.0*(y*z + w*x), w*w - x*x - y*y + z*z],
    ])


def rotation_jacobian(q):
    """
    Derivatives of rotation_matrix with respect to each quaternion entry.

    Returns:
        np.ndarray: shape (4, 3, 3); entry k is dQ/dq_k
    """
    w, x, y, z = np.asarray(q, dtype=float)
    return 2.0 * np.array([
        [[w, -z, y], [z, w, -x], [-y, x, w]],
        [[x, y, z], [y, -x, -w], [z, w, -x]],
        [[-y, x, w], [x, y, z], [-w, z, -y]],
        [[-z, -w, x], [w, -z, y], [x, y, z]],
    ])


def quat_to_rotmat(q):
    """
    Rotation matrix of a unit quaternion

    Args:
        q: Scalar-first unit quaternion

    Returns:
        np.ndarray: 3x3 proper orthogonal matrix

    Raises:
        ValidationError: If q is not unit within 1e-9
    """
    q = validate_unit_quaternion(q, tol=1e-9)
    return rotation_matrix(q)


def basis_tangent_cols(q):
    """First two columns of quat_to_rotmat(q): the polygon plane basis."""
    return quat_to_rotmat(q)[:, :2]


def capsule_endpoints(pose, length):
    """
    Endpoints of a capsule's central segment

    Args:
        pose: Object with world position ``r`` and unit quaternion ``q``
        length: Segment length L > 0

    Returns:
        tuple: (a, b) with a = r + Q (L/2, 0, 0) and b = r - Q (L/2, 0, 0)

    Raises:
        ValidationError: If L <= 0
    """
    length = validate_positive(length, 'Capsule length')
    axis = quat_to_rotmat(pose.q)[:, 0]
    half = 0.5 * length * axis
    r = np.asarray(pose.r, dtype=float)
    return r + half, r - half
