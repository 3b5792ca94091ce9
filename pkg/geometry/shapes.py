"""
Pose and shape primitives.

All three types are immutable: their arrays are copied on construction
and marked read-only.
"""

from dataclasses import dataclass

import numpy as np
from django.core.exceptions import ValidationError

from core.conf import get_setting
from core.utils.validators import (
    validate_positive,
    validate_unit_quaternion,
    validate_vector,
)

from .polygons import is_bounded, normalize_halfspaces
from .transforms import basis_tangent_cols, capsule_endpoints

IDENTITY_QUATERNION = (1.0, 0.0, 0.0, 0.0)

# Segment length standing in for a sphere; L = 0 zeroes the capsule QP cost
SPHERE_LENGTH = 1e-6


def _frozen(array):
    array = np.array(array, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class Pose:
    """World position r and scalar-first unit quaternion q of a rigid body."""

    r: np.ndarray
    q: np.ndarray = IDENTITY_QUATERNION

    def __post_init__(self):
        r = validate_vector(self.r, 3, 'Position r')
        q = validate_unit_quaternion(
            self.q,
            tol=1e-9,
            normalize_tol=get_setting('DIFFPROX_QUATERNION_NORM_TOL', 1e-6),
            field_name='Quaternion q',
        )
        object.__setattr__(self, 'r', _frozen(r))
        object.__setattr__(self, 'q', _frozen(q / np.linalg.norm(q)))

    def __repr__(self):
        return f'Pose(r={self.r.tolist()}, q={self.q.tolist()})'


@dataclass(frozen=True, eq=False)
class Capsule:
    """Points within radius R of a segment of length L along the body x axis."""

    pose: Pose
    L: float
    R: float

    kind = 'capsule'

    def __post_init__(self):
        if not isinstance(self.pose, Pose):
            raise ValidationError('Capsule pose must be a Pose')
        object.__setattr__(self, 'L', validate_positive(self.L, 'Capsule length L'))
        object.__setattr__(self, 'R', validate_positive(self.R, 'Capsule radius R'))

    @property
    def endpoints(self):
        """(a, b) endpoints of the central segment."""
        return capsule_endpoints(self.pose, self.L)

    def with_pose(self, pose):
        return Capsule(pose, self.L, self.R)

    def __repr__(self):
        return f'Capsule({self.pose!r}, L={self.L}, R={self.R})'


@dataclass(frozen=True, eq=False)
class PaddedPolygon:
    """
    Points within radius R of a convex polygon {y : C y <= d} that lies in
    the plane of the first two body axes, centered on the body origin.
    """

    pose: Pose
    C: np.ndarray
    d: np.ndarray
    R: float

    kind = 'padded_polygon'

    def __post_init__(self):
        if not isinstance(self.pose, Pose):
            raise ValidationError('Polygon pose must be a Pose')
        C, d = normalize_halfspaces(self.C, self.d)
        if np.any(d <= 0.0):
            row = int(np.argmin(d))
            raise ValidationError(
                f'Polygon offsets d must be positive (origin strictly inside); row {row} has d={d[row]:.6g}'
            )
        if not is_bounded(C):
            raise ValidationError('Polygon halfspaces do not bound a finite region')
        object.__setattr__(self, 'C', _frozen(C))
        object.__setattr__(self, 'd', _frozen(d))
        object.__setattr__(self, 'R', validate_positive(self.R, 'Polygon padding R'))

    @property
    def basis(self):
        """3x2 world-frame basis of the polygon plane."""
        return basis_tangent_cols(self.pose.q)

    def with_pose(self, pose):
        return PaddedPolygon(pose, self.C, self.d, self.R)

    def __repr__(self):
        return f'PaddedPolygon({self.pose!r}, m={self.C.shape[0]}, R={self.R})'


def sphere(pose, R):
    """A sphere of radius R, represented as a capsule with a tiny segment."""
    return Capsule(pose, SPHERE_LENGTH, R)
