"""
Test Suite for Geometry App
Contains unit tests for:
- Quaternion rotation matrices and their derivatives
- Polygon halfspace utilities
- Pose, capsule and padded polygon construction
"""

import math

import numpy as np
from django.core.exceptions import ValidationError
from django.test import SimpleTestCase

from .polygons import (
    is_bounded,
    normalize_halfspaces,
    polygon_contains,
    polygon_vertices,
    regular_polygon,
)
from .shapes import SPHERE_LENGTH, Capsule, PaddedPolygon, Pose, sphere
from .transforms import (
    basis_tangent_cols,
    capsule_endpoints,
    quat_to_rotmat,
    rotation_jacobian,
    rotation_matrix,
)


def quat_multiply(p, q):
    """Hamilton product p q, scalar first."""
    w1, x1, y1, z1 = p
    w2, x2, y2, z2 = q
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


class TransformTest(SimpleTestCase):
    """Test cases for quaternion utilities"""

    def setUp(self):
        self.rng = np.random.default_rng(4)

    def random_quaternion(self):
        q = self.rng.normal(size=4)
        return q / np.linalg.norm(q)

    def test_identity(self):
        """Test the identity quaternion gives the identity matrix"""
        np.testing.assert_array_equal(quat_to_rotmat([1, 0, 0, 0]), np.eye(3))

    def test_proper_rotation(self):
        """Test Q'Q = I and det Q = 1 for random unit quaternions"""
        for _ in range(100):
            Q = quat_to_rotmat(self.random_quaternion())
            np.testing.assert_allclose(Q.T @ Q, np.eye(3), atol=1e-12)
            self.assertAlmostEqual(np.linalg.det(Q), 1.0, places=12)

    def test_quarter_turn_about_z(self):
        """Test a 90 degree yaw maps x to y"""
        q = [math.cos(math.pi / 4), 0.0, 0.0, math.sin(math.pi / 4)]
        np.testing.assert_allclose(quat_to_rotmat(q) @ [1, 0, 0], [0, 1, 0], atol=1e-15)

    def test_sign_invariance(self):
        """Test q and -q give the same rotation"""
        q = self.random_quaternion()
        np.testing.assert_allclose(quat_to_rotmat(q), quat_to_rotmat(-q), atol=1e-15)

    def test_non_unit_rejected(self):
        """Test quat_to_rotmat rejects non-unit quaternions"""
        with self.assertRaises(ValidationError):
            quat_to_rotmat([0.9, 0.0, 0.0, 0.0])

    def test_rotation_jacobian(self):
        """Test dQ/dq against central differences, off the unit sphere too"""
        q = 1.3 * self.random_quaternion()
        J = rotation_jacobian(q)
        h = 1e-6
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            fd = (rotation_matrix(q + e) - rotation_matrix(q - e)) / (2 * h)
            np.testing.assert_allclose(J[k], fd, atol=1e-9)

    def test_basis_and_endpoints(self):
        """Test the plane basis and the capsule endpoints follow Q"""
        q = self.random_quaternion()
        Q = quat_to_rotmat(q)
        np.testing.assert_array_equal(basis_tangent_cols(q), Q[:, :2])

        a, b = capsule_endpoints(Pose([1.0, 2.0, 3.0], q), 2.0)
        np.testing.assert_allclose(a - b, 2.0 * Q[:, 0], atol=1e-14)
        np.testing.assert_allclose(0.5 * (a + b), [1.0, 2.0, 3.0], atol=1e-14)

    def test_endpoints_quarter_turn(self):
        """Test r=(0,0,1) turned 90 degrees about z with L=2"""
        q = [math.cos(math.pi / 4), 0.0, 0.0, math.sin(math.pi / 4)]
        a, b = capsule_endpoints(Pose([0.0, 0.0, 1.0], q), 2.0)
        np.testing.assert_allclose(a, [0.0, 1.0, 1.0], atol=1e-15)
        np.testing.assert_allclose(b, [0.0, -1.0, 1.0], atol=1e-15)

    def test_endpoints_follow_rigid_motion(self):
        """Test moving the pose by (R0, t0) maps a and b to R0 a + t0 and R0 b + t0"""
        for _ in range(50):
            q = self.random_quaternion()
            q0 = self.random_quaternion()
            r = self.rng.normal(size=3)
            t0 = self.rng.normal(size=3)
            R0 = quat_to_rotmat(q0)

            a, b = capsule_endpoints(Pose(r, q), 1.7)
            moved_a, moved_b = capsule_endpoints(Pose(R0 @ r + t0, quat_multiply(q0, q)), 1.7)
            np.testing.assert_allclose(moved_a, R0 @ a + t0, atol=1e-12)
            np.testing.assert_allclose(moved_b, R0 @ b + t0, atol=1e-12)


class PolygonTest(SimpleTestCase):
    """Test cases for polygon halfspaces"""

    def test_regular_square(self):
        """Test a square of circumradius sqrt(2) has unit apothem"""
        C, d = regular_polygon(4, math.sqrt(2.0))
        np.testing.assert_allclose(d, np.ones(4), atol=1e-15)
        np.testing.assert_allclose(C[0], [1.0, 0.0])
        vertices = polygon_vertices(C, d)
        self.assertEqual(vertices.shape, (4, 2))
        np.testing.assert_allclose(np.abs(vertices), np.ones((4, 2)), atol=1e-12)

    def test_regular_polygon_vertices_on_circle(self):
        """Test every vertex of a regular hexagon lies on the circumcircle"""
        C, d = regular_polygon(6, 0.8)
        vertices = polygon_vertices(C, d)
        self.assertEqual(vertices.shape, (6, 2))
        np.testing.assert_allclose(np.linalg.norm(vertices, axis=1), 0.8, atol=1e-12)

    def test_regular_polygon_arguments(self):
        """Test fewer than 3 vertices and non-positive radii are rejected"""
        with self.assertRaises(ValidationError):
            regular_polygon(2, 1.0)
        with self.assertRaises(ValidationError):
            regular_polygon(5, 0.0)

    def test_contains(self):
        """Test membership with and without tolerance"""
        C, d = regular_polygon(4, math.sqrt(2.0))
        self.assertTrue(polygon_contains(C, d, [0.5, -0.5]))
        self.assertFalse(polygon_contains(C, d, [1.0 + 1e-9, 0.0]))
        self.assertTrue(polygon_contains(C, d, [1.0 + 1e-9, 0.0], tol=1e-8))

    def test_normalize(self):
        """Test rows are scaled to unit norm with their offsets"""
        C, d = normalize_halfspaces([[2.0, 0.0], [0.0, 3.0]], [4.0, 3.0])
        np.testing.assert_allclose(C, np.eye(2))
        np.testing.assert_allclose(d, [2.0, 1.0])
        with self.assertRaises(ValidationError):
            normalize_halfspaces([[0.0, 0.0]], [1.0])

    def test_boundedness(self):
        """Test a strip and a wedge are unbounded, a triangle is not"""
        self.assertFalse(is_bounded([[1.0, 0.0], [-1.0, 0.0]]))
        self.assertFalse(is_bounded([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]))
        C, _ = regular_polygon(3, 1.0)
        self.assertTrue(is_bounded(C))


class ShapeTest(SimpleTestCase):
    """Test cases for Pose, Capsule and PaddedPolygon"""

    def test_pose_renormalizes_small_drift(self):
        """Test quaternions within the tolerance are renormalized"""
        pose = Pose([0, 0, 0], [1.0 + 1e-7, 0.0, 0.0, 0.0])
        np.testing.assert_array_equal(pose.q, [1.0, 0.0, 0.0, 0.0])

    def test_pose_rejects_large_drift(self):
        """Test a quaternion of norm 0.9 is rejected"""
        with self.assertRaises(ValidationError):
            Pose([0, 0, 0], [0.9, 0.0, 0.0, 0.0])

    def test_pose_is_read_only(self):
        """Test pose arrays cannot be modified"""
        pose = Pose([1.0, 2.0, 3.0])
        with self.assertRaises(ValueError):
            pose.r[0] = 5.0

    def test_capsule_needs_positive_size(self):
        """Test L and R must be positive"""
        with self.assertRaises(ValidationError):
            Capsule(Pose([0, 0, 0]), 0.0, 0.1)
        with self.assertRaises(ValidationError):
            Capsule(Pose([0, 0, 0]), 1.0, -0.1)

    def test_polygon_origin_inside(self):
        """Test the body origin must be strictly inside the polygon"""
        with self.assertRaises(ValidationError):
            PaddedPolygon(Pose([0, 0, 0]), [[1, 0], [0, 1], [-1, 0], [0, -1]], [1, 1, 0, 1], 0.1)

    def test_polygon_must_be_bounded(self):
        """Test an unbounded halfspace set is rejected"""
        with self.assertRaises(ValidationError):
            PaddedPolygon(Pose([0, 0, 0]), [[1, 0], [0, 1], [1, 1]], [1, 1, 1], 0.1)

    def test_polygon_rows_normalized(self):
        """Test scaled rows are stored with unit normals"""
        polygon = PaddedPolygon(Pose([0, 0, 0]), [[2, 0], [0, 2], [-2, 0], [0, -2]], [1, 1, 1, 1], 0.1)
        np.testing.assert_allclose(polygon.d, [0.5, 0.5, 0.5, 0.5])
        np.testing.assert_array_equal(polygon.basis, np.eye(3)[:, :2])

    def test_with_pose(self):
        """Test with_pose keeps the shape parameters"""
        capsule = Capsule(Pose([0, 0, 0]), 2.0, 0.3)
        moved = capsule.with_pose(Pose([1, 1, 1]))
        self.assertEqual((moved.L, moved.R), (2.0, 0.3))
        np.testing.assert_array_equal(moved.pose.r, [1, 1, 1])

    def test_sphere(self):
        """Test a sphere is a capsule with a tiny segment"""
        ball = sphere(Pose([0, 0, 1]), 0.5)
        self.assertEqual(ball.kind, 'capsule')
        self.assertEqual(ball.L, SPHERE_LENGTH)
        self.assertEqual(ball.R, 0.5)
