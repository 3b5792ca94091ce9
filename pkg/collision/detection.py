"""
Proximity queries and their pose Jacobians.

For every pair the closest points are affine in the QP variables,

    p1 = o1 + B1 z1,   p2 = o2 + B2 z2,   p1 - p2 = F z + e,

with F = [B1, -B2] and e = o1 - o2. A capsule contributes the single
column B = a - b = L Q[:, 0] and offset o = b; a polygon contributes its
plane basis B = Q[:, :2] and offset o = r. The proximity value is

    phi = |p1 - p2|^2 - (R1 + R2)^2.
"""

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from django.core.exceptions import ValidationError

from core.conf import get_setting
from core.exceptions import DegenerateProblemError
from geometry.transforms import rotation_jacobian, rotation_matrix
from qp.active_set import solve_box_qp
from qp.backward import qp_backward
from qp.interior_point import pdip_solve
from qp.types import QPData, QPSolution

from .problems import capsule_capsule_qp, capsule_polygon_qp, polygon_polygon_qp

logger = logging.getLogger(__name__)

CAPSULE_CAPSULE = 'capsule_capsule'
POLYGON_POLYGON = 'polygon_polygon'
CAPSULE_POLYGON = 'capsule_polygon'


@dataclass(frozen=True, eq=False)
class ProximityResult:
    """Proximity value, closest points and the QP solution behind them."""

    phi: float
    p1: np.ndarray
    p2: np.ndarray
    p1_surf: Optional[np.ndarray]
    p2_surf: Optional[np.ndarray]
    qp: QPSolution
    pair_kind: str
    evaluation: Optional['_Evaluation'] = field(default=None, repr=False)
    swapped: bool = False

    @property
    def distance(self):
        """Distance between the central primitives."""
        return float(np.linalg.norm(self.p1 - self.p2))

    @property
    def collision(self):
        return self.phi <= 0.0

    def jacobians(self, through_qp=True):
        """
        Pose Jacobians of phi at this result, reusing its QP solution

        Raises:
            NondifferentiablePointError: As proximity_jacobians
        """
        if self.evaluation is None:
            raise ValidationError('Result carries no QP evaluation to differentiate')
        jacobians = _jacobians(self.evaluation, through_qp)
        return jacobians.swapped() if self.swapped else jacobians


@dataclass(frozen=True, eq=False)
class ProximityJacobians:
    """Row Jacobians of phi with respect to both poses (ambient quaternion)."""

    dphi_dr1: np.ndarray
    dphi_dq1: np.ndarray
    dphi_dr2: np.ndarray
    dphi_dq2: np.ndarray

    def as_vector(self):
        """All 14 entries in the order r1, q1, r2, q2."""
        return np.concatenate([self.dphi_dr1, self.dphi_dq1, self.dphi_dr2, self.dphi_dq2])

    @classmethod
    def from_vector(cls, vector):
        vector = np.asarray(vector, dtype=float)
        return cls(vector[0:3], vector[3:7], vector[7:10], vector[10:14])

    def swapped(self):
        return ProximityJacobians(self.dphi_dr2, self.dphi_dq2, self.dphi_dr1, self.dphi_dq1)


@dataclass(frozen=True, eq=False)
class _Body:
    """Pose-dependent pieces of one primitive at a raw (r, q)."""

    shape: object
    r: np.ndarray
    q: np.ndarray
    B: np.ndarray
    o: np.ndarray

    @property
    def k(self):
        return self.B.shape[1]


def _body(shape, r, q):
    r = np.asarray(r, dtype=float)
    q = np.asarray(q, dtype=float)
    Q = rotation_matrix(q)
    if shape.kind == 'capsule':
        half = 0.5 * shape.L * Q[:, 0]
        a, b = r + half, r - half
        return _Body(shape, r, q, (a - b)[:, None], b)
    return _Body(shape, r, q, Q[:, :2], r)


def _pair_kind(shape1, shape2):
    kinds = (shape1.kind, shape2.kind)
    if kinds == ('capsule', 'capsule'):
        return CAPSULE_CAPSULE
    if kinds == ('padded_polygon', 'padded_polygon'):
        return POLYGON_POLYGON
    if kinds == ('capsule', 'padded_polygon'):
        return CAPSULE_POLYGON
    if kinds == ('padded_polygon', 'capsule'):
        return None
    raise ValidationError(f'Unsupported shape pair {kinds}')


def _pair_qp(kind, body1, body2):
    s1, s2 = body1.shape, body2.shape
    if kind == CAPSULE_CAPSULE:
        a1, b1 = body1.o + body1.B[:, 0], body1.o
        a2, b2 = body2.o + body2.B[:, 0], body2.o
        return capsule_capsule_qp(a1, b1, a2, b2)
    if kind == POLYGON_POLYGON:
        return polygon_polygon_qp(body1.r, body1.B, body2.r, body2.B, s1.C, s1.d, s2.C, s2.d)
    a1, b1 = body1.o + body1.B[:, 0], body1.o
    return capsule_polygon_qp(a1, b1, body2.r, body2.B, s2.C, s2.d)


def _solve(kind, data):
    if kind == CAPSULE_CAPSULE:
        try:
            return solve_box_qp(data)
        except DegenerateProblemError as exc:
            logger.info('Active-set solver fell back to interior point: %s', exc)
    return pdip_solve(data)


@dataclass(frozen=True, eq=False)
class _Evaluation:
    kind: str
    body1: _Body
    body2: _Body
    data: QPData
    sol: QPSolution
    F: np.ndarray
    e: np.ndarray


def _evaluate(shape1, r1, q1, shape2, r2, q2):
    """Solve the pair QP with body 1 a capsule whenever the pair is mixed."""
    kind = _pair_kind(shape1, shape2)
    body1 = _body(shape1, r1, q1)
    body2 = _body(shape2, r2, q2)
    data = _pair_qp(kind, body1, body2)
    sol = _solve(kind, data)
    F = np.hstack([body1.B, -body2.B])
    e = body1.o - body2.o
    return _Evaluation(kind, body1, body2, data, sol, F, e)


def _phi(evaluation):
    gap = evaluation.F @ evaluation.sol.x + evaluation.e
    radii = evaluation.body1.shape.R + evaluation.body2.shape.R
    return float(gap @ gap - radii * radii)


def _surface_points(p1, p2, R1, R2):
    gap = p2 - p1
    distance = np.linalg.norm(gap)
    if distance < get_setting('DIFFPROX_SURFACE_POINT_TOL', 1e-10):
        return None, None
    direction = gap / distance
    return p1 + R1 * direction, p2 - R2 * direction


def proximity(shape1, shape2):
    """
    Proximity value and closest points of two shapes

    Capsule pairs are solved with the closed-form active-set solver
    (interior point on parallel axes); polygon pairs with the interior-point
    solver. Either argument order is accepted.

    Args:
        shape1, shape2: Capsule or PaddedPolygon

    Returns:
        ProximityResult with p1 on shape1 and p2 on shape2

    Raises:
        NonConvergenceError: If the interior-point solver does not converge
    """
    if _pair_kind(shape1, shape2) is None:
        result = proximity(shape2, shape1)
        return ProximityResult(
            phi=result.phi,
            p1=result.p2, p2=result.p1,
            p1_surf=result.p2_surf, p2_surf=result.p1_surf,
            qp=result.qp,
            pair_kind=result.pair_kind,
            evaluation=result.evaluation,
            swapped=True,
        )

    evaluation = _evaluate(
        shape1, shape1.pose.r, shape1.pose.q,
        shape2, shape2.pose.r, shape2.pose.q,
    )
    b1, b2 = evaluation.body1, evaluation.body2
    k1 = b1.k
    x = evaluation.sol.x
    p1 = b1.o + b1.B @ x[:k1]
    p2 = b2.o + b2.B @ x[k1:]
    p1_surf, p2_surf = _surface_points(p1, p2, shape1.R, shape2.R)

    return ProximityResult(
        phi=_phi(evaluation),
        p1=p1, p2=p2,
        p1_surf=p1_surf, p2_surf=p2_surf,
        qp=evaluation.sol,
        pair_kind=evaluation.kind,
        evaluation=evaluation,
    )


def _pullback(body, gB, go):
    """Chain gradients with respect to (B, o) down to (r, q)."""
    dQ = rotation_jacobian(body.q)
    if body.shape.kind == 'capsule':
        L = body.shape.L
        # B = L Q[:, 0] and o = r - (L/2) Q[:, 0]
        axis_grad = L * gB[:, 0] - 0.5 * L * go
        dq = np.array([axis_grad @ dQ[k][:, 0] for k in range(4)])
    else:
        dq = np.array([np.sum(gB * dQ[k][:, :2]) for k in range(4)])
    return np.array(go, dtype=float), dq


def proximity_jacobians(shape1, shape2, through_qp=True):
    """
    Total derivatives of phi with respect to both poses

    phi depends on the poses directly through (F, e) and indirectly through
    the QP solution z*. The indirect part runs the QP backward pass with
    dl/dz = 2 F'(F z* + e) and maps the gradients on (P, c) back to (F, e);
    G and h do not depend on the poses.

    Args:
        shape1, shape2: Capsule or PaddedPolygon
        through_qp: When False only the direct partials are returned, which
            equal the total derivatives wherever phi is differentiable

    Returns:
        ProximityJacobians

    Raises:
        NondifferentiablePointError: At weakly active constraints or
            non-unique closest points (e.g. parallel capsules)
    """
    return proximity(shape1, shape2).jacobians(through_qp)


def _jacobians(evaluation, through_qp):
    F, e, x = evaluation.F, evaluation.e, evaluation.sol.x
    gap = F @ x + e

    gF = 2.0 * np.outer(gap, x)
    ge = 2.0 * gap
    if through_qp:
        grads = qp_backward(evaluation.data, evaluation.sol, 2.0 * F.T @ gap)
        # P = F'F and c = F'e
        gF = gF + 2.0 * F @ grads.dP + np.outer(e, grads.dc)
        ge = ge + F @ grads.dc

    k1 = evaluation.body1.k
    dr1, dq1 = _pullback(evaluation.body1, gF[:, :k1], ge)
    dr2, dq2 = _pullback(evaluation.body2, -gF[:, k1:], -ge)
    return ProximityJacobians(dr1, dq1, dr2, dq2)


def _phi_at(shape1, shape2, coords):
    """phi at raw pose coordinates (r1, q1, r2, q2); q is not renormalized."""
    if _pair_kind(shape1, shape2) is None:
        swapped = np.concatenate([coords[7:14], coords[0:7]])
        return _phi_at(shape2, shape1, swapped)
    evaluation = _evaluate(shape1, coords[0:3], coords[3:7], shape2, coords[7:10], coords[10:14])
    return _phi(evaluation)


def finite_diff_jacobians(shape1, shape2, step=1e-6):
    """
    Central-difference Jacobians of phi

    Every pose coordinate is perturbed by +-step; quaternion entries are
    perturbed in ambient 4-space without renormalization.

    Args:
        shape1, shape2: Capsule or PaddedPolygon
        step: Difference step, > 0

    Returns:
        ProximityJacobians
    """
    step = float(step)
    if not np.isfinite(step) or step <= 0.0:
        raise ValidationError(f'Finite-difference step must be positive, got {step!r}')

    coords = np.concatenate([
        shape1.pose.r, shape1.pose.q,
        shape2.pose.r, shape2.pose.q,
    ])
    gradient = np.zeros(14)
    for i in range(14):
        plus = coords.copy()
        minus = coords.copy()
        plus[i] += step
        minus[i] -= step
        gradient[i] = (_phi_at(shape1, shape2, plus) - _phi_at(shape1, shape2, minus)) / (2.0 * step)
    return ProximityJacobians.from_vector(gradient)
