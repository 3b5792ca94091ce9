"""
Planar polygon utilities.

A polygon is the halfspace intersection {y in R^2 : C y <= d}, with the
local origin strictly inside (d > 0) and unit-norm rows of C.
"""

import math

import numpy as np
from django.core.exceptions import ValidationError

from core.utils.validators import validate_matrix, validate_positive, validate_vector

# Largest angular gap between consecutive normals of a bounded polygon
_MAX_NORMAL_GAP = math.pi - 1e-12


def regular_polygon(n, circumradius):
    """
    Halfspaces of a regular polygon centered at the origin

    Face normals point along angles 2*pi*k/n, so the first face is crossed
    by the positive y_1 axis; every offset equals the apothem
    circumradius * cos(pi/n).

    Args:
        n: Vertex count, n >= 3
        circumradius: Distance from the center to each vertex, > 0

    Returns:
        tuple: (C, d) with C of shape (n, 2) and d of shape (n,)

    Raises:
        ValidationError: If n < 3 or circumradius <= 0
    """
    if isinstance(n, bool) or int(n) != n or n < 3:
        raise ValidationError(f'A regular polygon needs at least 3 vertices, got {n!r}')
    n = int(n)
    circumradius = validate_positive(circumradius, 'Circumradius')

    angles = 2.0 * np.pi * np.arange(n) / n
    C = np.column_stack([np.cos(angles), np.sin(angles)])
    d = np.full(n, circumradius * np.cos(np.pi / n))
    return C, d


def polygon_contains(C, d, y, tol=0.0):
    """True iff C y <= d + tol elementwise."""
    C = np.asarray(C, dtype=float)
    d = np.asarray(d, dtype=float)
    y = np.asarray(y, dtype=float)
    return bool(np.all(C @ y <= d + tol))


def normalize_halfspaces(C, d):
    """
    Scale each row of (C, d) so that the rows of C have unit norm

    Raises:
        ValidationError: On shape mismatch or a zero row
    """
    C = validate_matrix(C, (None, 2), 'Halfspace normals C')
    d = validate_vector(d, C.shape[0], 'Halfspace offsets d')

    norms = np.linalg.norm(C, axis=1)
    if np.any(norms <= 1e-12):
        row = int(np.argmin(norms))
        raise ValidationError(f'Halfspace normal row {row} is zero')
    return C / norms[:, None], d / norms


def is_bounded(C):
    """
    Whether {y : C y <= d} is bounded for every d

    The 2-D recession cone {y : C y <= 0} is trivial exactly when the row
    directions leave no angular gap of pi or more.
    """
    C = np.asarray(C, dtype=float)
    if C.shape[0] < 3:
        return False
    angles = np.sort(np.arctan2(C[:, 1], C[:, 0]))
    gaps = np.diff(np.append(angles, angles[0] + 2.0 * np.pi))
    return bool(np.max(gaps) < _MAX_NORMAL_GAP)


def polygon_vertices(C, d, tol=1e-9):
    """
    Vertices of a bounded polygon in counter-clockwise order

    Args:
        C: (m, 2) halfspace normals
        d: (m,) halfspace offsets
        tol: Feasibility tolerance for candidate intersections

    Returns:
        np.ndarray: (k, 2) vertex array
    """
    C = np.asarray(C, dtype=float)
    d = np.asarray(d, dtype=float)
    m = C.shape[0]

    candidates = []
    for i in range(m):
        for j in range(i + 1, m):
            A = C[[i, j]]
            det = A[0, 0] * A[1, 1] - A[0, 1] * A[1, 0]
            if abs(det) < 1e-12:
                continue
            y = np.linalg.solve(A, d[[i, j]])
            if np.all(C @ y <= d + tol):
                candidates.append(y)

    if not candidates:
        return np.zeros((0, 2))

    points = np.array(candidates)
    center = points.mean(axis=0)
    order = np.argsort(np.arctan2(points[:, 1] - center[1], points[:, 0] - center[0]))
    points = points[order]

    # Collapse duplicates produced by redundant halfspaces
    keep = [points[0]]
    for point in points[1:]:
        if np.linalg.norm(point - keep[-1]) > 1e-9:
            keep.append(point)
    if len(keep) > 1 and np.linalg.norm(keep[0] - keep[-1]) <= 1e-9:
        keep.pop()
    return np.array(keep)
