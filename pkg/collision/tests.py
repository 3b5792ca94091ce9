"""
Test Suite for Collision App
Contains unit tests and integration tests for:
- QP data of the three primitive pairs
- Proximity values against hand-computed scenes and a grid-search oracle
- Pose Jacobians against finite differences
- Scene loading and the proximity / jacobians / checkgrad commands
"""

import json
from io import StringIO

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase
from scipy.spatial.distance import cdist

from core.exceptions import NondifferentiablePointError
from geometry.polygons import polygon_vertices, regular_polygon
from geometry.shapes import Capsule, PaddedPolygon, Pose
from geometry.transforms import basis_tangent_cols, quat_to_rotmat

from .detection import finite_diff_jacobians, proximity, proximity_jacobians
from .gradcheck import check_gradients, compare
from .problems import capsule_capsule_qp, capsule_polygon_qp, polygon_polygon_qp
from .scenes import parse_scene

SCENES = settings.BASE_DIR / 'scenes'

SQUARE_C = [[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]
SQUARE_D = [0.5, 0.5, 0.5, 0.5]

# Rotations taking the body x axis to world y and to world z
X_TO_Y = (np.sqrt(0.5), 0.0, 0.0, np.sqrt(0.5))
X_TO_Z = (np.sqrt(0.5), 0.0, -np.sqrt(0.5), 0.0)


def random_quaternion(rng):
    q = rng.normal(size=4)
    return q / np.linalg.norm(q)


def random_shape(rng, kind, center):
    pose = Pose(center, random_quaternion(rng))
    if kind == 'capsule':
        return Capsule(pose, rng.uniform(0.5, 2.0), rng.uniform(0.05, 0.3))
    C, d = regular_polygon(int(rng.integers(3, 9)), rng.uniform(0.4, 1.2))
    return PaddedPolygon(pose, C, d, rng.uniform(0.05, 0.3))


def random_pair(rng, kinds, separation):
    r1 = rng.uniform(-1.0, 1.0, 3)
    direction = rng.normal(size=3)
    r2 = r1 + separation * direction / np.linalg.norm(direction)
    return random_shape(rng, kinds[0], r1), random_shape(rng, kinds[1], r2)


PAIR_KINDS = (
    ('capsule', 'capsule'),
    ('padded_polygon', 'padded_polygon'),
    ('capsule', 'padded_polygon'),
)


def _points(shape, z):
    if shape.kind == 'capsule':
        a, b = shape.endpoints
        return b + z[:, :1] * (a - b)
    return shape.pose.r + z @ shape.basis.T


def _feasible(shape, z):
    if shape.kind == 'capsule':
        return (z[:, 0] >= 0.0) & (z[:, 0] <= 1.0)
    return np.all(z @ shape.C.T <= shape.d + 1e-12, axis=1)


def _coarse_grid(shape, count=41):
    if shape.kind == 'capsule':
        return np.linspace(0.0, 1.0, count)[:, None], 1.0 / (count - 1)
    vertices = polygon_vertices(shape.C, shape.d)
    lo, hi = vertices.min(axis=0), vertices.max(axis=0)
    axes = [np.linspace(lo[i], hi[i], count) for i in range(2)]
    grid = np.stack(np.meshgrid(*axes, indexing='ij'), axis=-1).reshape(-1, 2)
    return grid[_feasible(shape, grid)], float(np.max(hi - lo)) / (count - 1)


def grid_distance(shape1, shape2, min_step=1e-8):
    """
    Distance between the central primitives by grid search

    A coarse sampling of both parameter domains picks a starting pair,
    which a shrinking pattern search over the joint parameters refines.
    """
    Z1, h1 = _coarse_grid(shape1)
    Z2, h2 = _coarse_grid(shape2)
    distances = cdist(_points(shape1, Z1), _points(shape2, Z2))
    i, j = np.unravel_index(np.argmin(distances), distances.shape)

    k1 = Z1.shape[1]
    z = np.concatenate([Z1[i], Z2[j]])
    best = distances[i, j]
    dim = z.shape[0]
    h = 2.0 * max(h1, h2)
    offsets = np.linspace(-1.0, 1.0, 7)
    stencil = np.stack(np.meshgrid(*[offsets] * dim, indexing='ij'), axis=-1).reshape(-1, dim)

    while h > min_step:
        candidates = z + h * stencil
        keep = _feasible(shape1, candidates[:, :k1]) & _feasible(shape2, candidates[:, k1:])
        candidates = candidates[keep]
        gaps = _points(shape1, candidates[:, :k1]) - _points(shape2, candidates[:, k1:])
        values = np.linalg.norm(gaps, axis=1)
        index = int(np.argmin(values))
        if values[index] < best:
            z, best = candidates[index], values[index]
        else:
            h /= 3.0
    return best


class PairProblemTest(SimpleTestCase):
    """Test cases for the pair QP builders"""

    def setUp(self):
        self.rng = np.random.default_rng(7)

    def test_capsule_capsule_objective_identity(self):
        """Test the QP objective equals half the squared segment gap"""
        a1, b1 = np.array([1.0, 0.0, 0.0]), np.array([-1.0, 0.0, 0.0])
        a2, b2 = np.array([0.0, 1.0, 3.0]), np.array([0.0, -1.0, 3.0])
        data = capsule_capsule_qp(a1, b1, a2, b2)

        np.testing.assert_allclose(data.P, np.diag([4.0, 4.0]))
        np.testing.assert_array_equal(data.h, [1.0, 1.0, 0.0, 0.0])

        theta = np.array([0.5, 0.5])
        p1 = theta[0] * a1 + (1 - theta[0]) * b1
        p2 = theta[1] * a2 + (1 - theta[1]) * b2
        lhs = data.objective(theta) + 0.5 * np.sum((b1 - b2) ** 2)
        self.assertAlmostEqual(lhs, 0.5 * np.sum((p1 - p2) ** 2), places=12)
        self.assertAlmostEqual(lhs, 4.5, places=12)

    def test_coincident_endpoints_rejected(self):
        """Test degenerate segments raise ValidationError"""
        point = [1.0, 2.0, 3.0]
        with self.assertRaises(ValidationError):
            capsule_capsule_qp(point, point, [0, 0, 0], [1, 0, 0])
        with self.assertRaises(ValidationError):
            capsule_polygon_qp(point, point, [0, 0, 0], np.eye(3)[:, :2], SQUARE_C, SQUARE_D)

    def test_polygon_polygon_objective_identity(self):
        """Test the objective identity at random points and poses"""
        C1, d1 = regular_polygon(5, 1.0)
        C2, d2 = regular_polygon(4, 0.7)
        r1, r2 = self.rng.normal(size=3), self.rng.normal(size=3)
        Q1 = Pose(r1, random_quaternion(self.rng)).q
        Q2 = Pose(r2, random_quaternion(self.rng)).q
        B1, B2 = basis_tangent_cols(Q1), basis_tangent_cols(Q2)

        data = polygon_polygon_qp(r1, B1, r2, B2, C1, d1, C2, d2)
        self.assertEqual(data.G.shape, (9, 4))
        self.assertLessEqual(np.linalg.matrix_rank(data.P), 3)

        for _ in range(100):
            y = self.rng.normal(size=4)
            gap = (r1 + B1 @ y[:2]) - (r2 + B2 @ y[2:])
            lhs = data.objective(y) + 0.5 * np.sum((r1 - r2) ** 2)
            self.assertAlmostEqual(lhs, 0.5 * gap @ gap, delta=1e-12 * max(1.0, gap @ gap))

    def test_capsule_polygon_structure(self):
        """Test h starts with (1, 0) and a normal axis decouples P"""
        a1, b1 = np.array([0.0, 0.0, 3.0]), np.array([0.0, 0.0, 1.0])
        data = capsule_polygon_qp(a1, b1, np.zeros(3), np.eye(3)[:, :2], SQUARE_C, SQUARE_D)

        np.testing.assert_array_equal(data.h[:2], [1.0, 0.0])
        np.testing.assert_array_equal(data.G[:2, 0], [1.0, -1.0])
        np.testing.assert_allclose(data.P[0, 1:], 0.0, atol=1e-15)

        theta, y = 0.3, np.array([0.2, -0.1])
        gap = (theta * a1 + (1 - theta) * b1) - np.array([y[0], y[1], 0.0])
        lhs = data.objective(np.array([theta, *y])) + 0.5 * np.sum(b1 ** 2)
        self.assertAlmostEqual(lhs, 0.5 * gap @ gap, places=12)


class ProximityValueTest(SimpleTestCase):
    """Test cases for proximity values on hand-computed scenes"""

    def capsule(self, r, q=(1.0, 0.0, 0.0, 0.0), L=2.0, R=0.25):
        return Capsule(Pose(r, q), L, R)

    def square(self, r, R=0.1):
        return PaddedPolygon(Pose(r), SQUARE_C, SQUARE_D, R)

    def test_perpendicular_capsules(self):
        """Test skew capsules meet at their midpoints"""
        result = proximity(self.capsule([0, 0, 0]), self.capsule([0, 0, 3], X_TO_Y))
        self.assertAlmostEqual(result.phi, 8.75, delta=1e-9)
        np.testing.assert_allclose(result.p1, [0, 0, 0], atol=1e-9)
        np.testing.assert_allclose(result.p2, [0, 0, 3], atol=1e-9)
        self.assertEqual(result.pair_kind, 'capsule_capsule')
        self.assertEqual(result.qp.solver, 'active_set')
        self.assertFalse(result.collision)

    def test_touching_collinear_capsules(self):
        """Test tangency gives phi = 0 and counts as collision"""
        result = proximity(self.capsule([0, 0, 0], R=0.5), self.capsule([3, 0, 0], R=0.5))
        self.assertAlmostEqual(result.phi, 0.0, delta=1e-9)
        np.testing.assert_allclose(result.p1, [1, 0, 0], atol=1e-9)
        np.testing.assert_allclose(result.p2, [2, 0, 0], atol=1e-9)
        self.assertTrue(result.phi <= 1e-9)

    def test_overlapping_collinear_capsules(self):
        """Test overlap gives a negative proximity value"""
        result = proximity(self.capsule([0, 0, 0], R=0.5), self.capsule([2.5, 0, 0], R=0.5))
        self.assertAlmostEqual(result.phi, -0.75, delta=1e-9)
        self.assertTrue(result.collision)

    def test_parallel_squares(self):
        """Test offset coplanar-parallel squares"""
        result = proximity(self.square([0, 0, 0]), self.square([0, 0, 2]))
        self.assertAlmostEqual(result.phi, 3.96, delta=1e-9)
        self.assertEqual(result.pair_kind, 'polygon_polygon')

    def test_capsule_over_square(self):
        """Test a vertical capsule above the middle of a square"""
        post = self.capsule([0, 0, 2], X_TO_Z, L=2.0, R=0.2)
        result = proximity(post, self.square([0, 0, 0]))
        self.assertAlmostEqual(result.phi, 0.91, delta=1e-9)
        np.testing.assert_allclose(result.p1, [0, 0, 1], atol=1e-9)
        np.testing.assert_allclose(result.p2, [0, 0, 0], atol=1e-9)

    def test_polygon_first_order(self):
        """Test polygon-capsule order mirrors capsule-polygon"""
        post = self.capsule([0, 0, 2], X_TO_Z, L=2.0, R=0.2)
        tile = self.square([0, 0, 0])
        forward = proximity(post, tile)
        backward = proximity(tile, post)
        self.assertAlmostEqual(forward.phi, backward.phi, delta=1e-12)
        np.testing.assert_allclose(backward.p1, forward.p2)
        np.testing.assert_allclose(backward.p2, forward.p1)
        self.assertEqual(backward.pair_kind, 'capsule_polygon')

    def test_identical_squares(self):
        """Test coincident squares give -(R1 + R2)^2"""
        result = proximity(self.square([0, 0, 0]), self.square([0, 0, 0]))
        self.assertAlmostEqual(result.phi, -0.04, delta=1e-9)
        self.assertIsNone(result.p1_surf)
        self.assertIsNone(result.p2_surf)

    def test_surface_points_on_padding(self):
        """Test surface points lie at distance R from the central points"""
        first = self.capsule([0, 0, 0], R=0.25)
        second = self.capsule([0.2, 0.4, 3], X_TO_Y, R=0.4)
        result = proximity(first, second)
        self.assertAlmostEqual(np.linalg.norm(result.p1_surf - result.p1), 0.25, delta=1e-12)
        self.assertAlmostEqual(np.linalg.norm(result.p2_surf - result.p2), 0.4, delta=1e-12)


class ProximityPropertyTest(SimpleTestCase):
    """Test cases for structural properties over random scenes"""

    def setUp(self):
        self.rng = np.random.default_rng(2024)

    def test_symmetry(self):
        """Test phi(A, B) = phi(B, A)"""
        for kinds in PAIR_KINDS:
            for _ in range(50):
                shape1, shape2 = random_pair(self.rng, kinds, self.rng.uniform(0.0, 3.0))
                self.assertAlmostEqual(
                    proximity(shape1, shape2).phi, proximity(shape2, shape1).phi, delta=1e-9
                )

    def test_rigid_invariance(self):
        """Test a common rigid motion leaves phi unchanged"""
        for kinds in PAIR_KINDS:
            for _ in range(30):
                shape1, shape2 = random_pair(self.rng, kinds, self.rng.uniform(0.5, 3.0))
                turn = random_quaternion(self.rng)
                shift = self.rng.uniform(-5.0, 5.0, 3)
                Q = quat_to_rotmat(turn)

                def moved(shape):
                    w0, v0 = turn[0], turn[1:]
                    w1, v1 = shape.pose.q[0], shape.pose.q[1:]
                    q = np.concatenate([[w0 * w1 - v0 @ v1], w0 * v1 + w1 * v0 + np.cross(v0, v1)])
                    return shape.with_pose(Pose(Q @ shape.pose.r + shift, q))

                before = proximity(shape1, shape2).phi
                after = proximity(moved(shape1), moved(shape2)).phi
                self.assertAlmostEqual(before, after, delta=1e-8 * max(1.0, abs(before)))

    def test_radius_inflation(self):
        """Test inflating both radii shifts phi by the change in (R1 + R2)^2"""
        delta = 0.1
        for _ in range(20):
            shape1, shape2 = random_pair(self.rng, ('capsule', 'capsule'), 2.0)
            radii = shape1.R + shape2.R
            inflated = proximity(
                Capsule(shape1.pose, shape1.L, shape1.R + delta),
                Capsule(shape2.pose, shape2.L, shape2.R + delta),
            )
            expected = proximity(shape1, shape2).phi - ((radii + 2 * delta) ** 2 - radii ** 2)
            self.assertAlmostEqual(inflated.phi, expected, delta=1e-9)

    def test_grid_oracle(self):
        """Test QP distances against grid search for every pair kind"""
        for kinds in PAIR_KINDS:
            for _ in range(15):
                shape1, shape2 = random_pair(self.rng, kinds, self.rng.uniform(0.0, 3.0))
                result = proximity(shape1, shape2)
                reference = grid_distance(shape1, shape2)
                self.assertAlmostEqual(result.distance, reference, delta=1e-3)

                radii = shape1.R + shape2.R
                reference_phi = reference ** 2 - radii ** 2
                if abs(result.phi) > 1e-6 and abs(reference_phi) > 1e-2:
                    self.assertEqual(result.phi > 0, reference_phi > 0)


class ProximityJacobiansTest(SimpleTestCase):
    """Test cases for the pose Jacobians of phi"""

    def setUp(self):
        self.rng = np.random.default_rng(11)

    def test_perpendicular_capsules(self):
        """Test d(phi)/d(r2) = 2 z along the common normal"""
        first = Capsule(Pose([0, 0, 0]), 2.0, 0.25)
        second = Capsule(Pose([0, 0, 3], X_TO_Y), 2.0, 0.25)
        jacobians = proximity_jacobians(first, second)
        np.testing.assert_allclose(jacobians.dphi_dr2, [0, 0, 6], atol=1e-9)
        np.testing.assert_allclose(jacobians.dphi_dr1, [0, 0, -6], atol=1e-9)

    def test_spin_about_own_axis(self):
        """Test the quaternion entry spinning a capsule about its axis has no effect"""
        first = Capsule(Pose([0, 0, 0]), 2.0, 0.25)
        second = Capsule(Pose([0.3, -0.2, 3], X_TO_Y), 2.0, 0.25)
        numeric = finite_diff_jacobians(first, second, 1e-6)
        analytic = proximity_jacobians(first, second)
        self.assertAlmostEqual(numeric.dphi_dq1[1], 0.0, delta=1e-8)
        self.assertAlmostEqual(analytic.dphi_dq1[1], 0.0, delta=1e-12)

    def test_parallel_capsules_nondifferentiable(self):
        """Test non-unique closest points raise NondifferentiablePointError"""
        first = Capsule(Pose([0, 0, 0]), 2.0, 0.25)
        second = Capsule(Pose([0.5, 1.0, 0]), 2.0, 0.25)
        proximity(first, second)
        with self.assertRaises(NondifferentiablePointError):
            proximity_jacobians(first, second)

    def test_direct_partials_match_total(self):
        """Test the QP contribution vanishes at strictly complementary points"""
        shape1, shape2 = random_pair(self.rng, ('capsule', 'padded_polygon'), 2.5)
        total = proximity_jacobians(shape1, shape2)
        direct = proximity_jacobians(shape1, shape2, through_qp=False)
        np.testing.assert_allclose(total.as_vector(), direct.as_vector(), atol=1e-7)

    def test_result_jacobians_reuse_its_solution(self):
        """Test a result differentiates its own QP solution in either argument order"""
        shape1, shape2 = random_pair(self.rng, ('capsule', 'padded_polygon'), 2.5)
        for first, second in ((shape1, shape2), (shape2, shape1)):
            result = proximity(first, second)
            self.assertIs(result.evaluation.sol, result.qp)
            np.testing.assert_array_equal(
                result.jacobians().as_vector(),
                proximity_jacobians(first, second).as_vector(),
            )

        forward = proximity(shape1, shape2).jacobians()
        backward = proximity(shape2, shape1).jacobians()
        np.testing.assert_allclose(backward.swapped().as_vector(), forward.as_vector(), atol=1e-12)

    def test_result_jacobians_nondifferentiable(self):
        """Test a parallel-capsule result raises but still gives direct partials"""
        result = proximity(Capsule(Pose([0, 0, 0]), 2.0, 0.25), Capsule(Pose([0.5, 1.0, 0]), 2.0, 0.25))
        with self.assertRaises(NondifferentiablePointError):
            result.jacobians()
        direct = result.jacobians(through_qp=False)
        np.testing.assert_allclose(direct.dphi_dr1, -direct.dphi_dr2, atol=1e-12)

    def test_finite_differences(self):
        """Test analytic Jacobians against central differences"""
        for kinds in PAIR_KINDS:
            checked = 0
            for _ in range(20):
                shape1, shape2 = random_pair(self.rng, kinds, self.rng.uniform(2.6, 4.0))
                try:
                    check = check_gradients(shape1, shape2, step=1e-6)
                except NondifferentiablePointError:
                    continue
                checked += 1
                self.assertTrue(check.passed, msg=f'{kinds}: max rel error {check.max_rel_error:.3e}')

                jacobians = proximity_jacobians(shape1, shape2)
                residual = np.max(np.abs(jacobians.dphi_dr1 + jacobians.dphi_dr2))
                self.assertLessEqual(residual, 1e-9 * max(1.0, np.max(np.abs(jacobians.dphi_dr1))))
            self.assertGreaterEqual(checked, 15)

    def test_step_refinement(self):
        """Test halving the step does not worsen the difference error"""
        shape1, shape2 = random_pair(self.rng, ('capsule', 'capsule'), 2.0)
        analytic = proximity_jacobians(shape1, shape2)
        coarse = compare(analytic, finite_diff_jacobians(shape1, shape2, 1e-5))
        fine = compare(analytic, finite_diff_jacobians(shape1, shape2, 5e-6))
        self.assertLessEqual(fine.max_abs_error, coarse.max_abs_error + 1e-8)

    def test_invalid_step(self):
        """Test non-positive steps are rejected"""
        shape1, shape2 = random_pair(self.rng, ('capsule', 'capsule'), 2.0)
        with self.assertRaises(ValidationError):
            finite_diff_jacobians(shape1, shape2, 0.0)


class SceneLoadingTest(SimpleTestCase):
    """Test cases for scene parsing"""

    def test_regular_ngon_body(self):
        """Test a regular polygon body is expanded into halfspaces"""
        bodies = parse_scene(json.dumps({'bodies': [{
            'name': 'plate', 'kind': 'padded_polygon', 'r': [0, 0, 0],
            'q': [1, 0, 0, 0], 'R': 0.1,
            'regular_ngon': {'n': 6, 'circumradius': 1.0},
        }]}))
        self.assertEqual(bodies[0].name, 'plate')
        self.assertEqual(bodies[0].shape.C.shape, (6, 2))

    def test_missing_quaternion_defaults_to_identity(self):
        """Test q may be omitted"""
        bodies = parse_scene('{"bodies": [{"name": "a", "kind": "capsule", "r": [0, 0, 0], "L": 1, "R": 0.1}]}')
        np.testing.assert_array_equal(bodies[0].shape.pose.q, [1, 0, 0, 0])

    def test_errors_name_the_body(self):
        """Test validation errors carry index, name and line"""
        text = '{"bodies": [\n{"name": "ok", "kind": "capsule", "r": [0, 0, 0], "L": 1, "R": 0.1},\n' \
               '{"name": "broken", "kind": "capsule", "r": [0, 0], "L": 1, "R": 0.1}\n]}'
        with self.assertRaises(ValidationError) as context:
            parse_scene(text, source='scene.json')
        message = context.exception.messages[0]
        self.assertIn("bodies[1] 'broken'", message)
        self.assertIn('line 3', message)

    def test_capsule_needs_length(self):
        """Test kind-specific fields are enforced"""
        with self.assertRaises(ValidationError):
            parse_scene('{"bodies": [{"name": "a", "kind": "capsule", "r": [0, 0, 0], "R": 0.1}]}')

    def test_unknown_field_rejected(self):
        """Test unknown body fields are reported"""
        with self.assertRaises(ValidationError):
            parse_scene('{"bodies": [{"name": "a", "kind": "capsule", "r": [0, 0, 0], "L": 1, "R": 0.1, "mass": 3}]}')

    def test_malformed_json(self):
        """Test JSON syntax errors report the line"""
        with self.assertRaises(ValidationError) as context:
            parse_scene('{"bodies": [\n{"name": }]}', source='scene.json')
        self.assertIn('line 2', context.exception.messages[0])


class CollisionCommandTest(SimpleTestCase):
    """Test cases for the proximity, jacobians and checkgrad commands"""

    def run_command(self, *args, **options):
        out, err = StringIO(), StringIO()
        call_command(*args, stdout=out, stderr=err, **options)
        return out.getvalue(), err.getvalue()

    def test_proximity_perpendicular(self):
        """Test the perpendicular capsule scene report"""
        out, _ = self.run_command('proximity', str(SCENES / 'capsules_perpendicular.json'))
        report = json.loads(out)
        self.assertAlmostEqual(report['phi'], 8.75, delta=1e-9)
        self.assertFalse(report['collision'])
        self.assertEqual(report['pair_kind'], 'capsule_capsule')
        self.assertIn('p1_surf', report)
        self.assertEqual(report['solver']['iterations'], 0)

    def test_proximity_touching_is_collision(self):
        """Test tangency reports collision"""
        out, _ = self.run_command('proximity', str(SCENES / 'capsules_touching.json'))
        report = json.loads(out)
        self.assertAlmostEqual(report['phi'], 0.0, delta=1e-9)
        self.assertTrue(report['collision'])

    def test_proximity_is_deterministic(self):
        """Test repeated runs produce identical bytes"""
        path = str(SCENES / 'capsule_over_square.json')
        first, _ = self.run_command('proximity', path)
        second, _ = self.run_command('proximity', path)
        self.assertEqual(first, second)
        self.assertAlmostEqual(json.loads(first)['phi'], 0.91, delta=1e-9)

    def test_bad_quaternion_exit_code(self):
        """Test a quaternion of norm 0.9 exits with code 2 naming the body"""
        with self.assertRaises(CommandError) as context:
            self.run_command('proximity', str(SCENES / 'bad_quaternion.json'))
        self.assertEqual(context.exception.returncode, 2)
        self.assertIn('skewed', str(context.exception))

    def test_missing_file_exit_code(self):
        """Test an unreadable scene exits with code 2"""
        with self.assertRaises(CommandError) as context:
            self.run_command('proximity', str(SCENES / 'does_not_exist.json'))
        self.assertEqual(context.exception.returncode, 2)

    def test_jacobians_report(self):
        """Test the Jacobian report of the perpendicular scene"""
        out, _ = self.run_command('jacobians', str(SCENES / 'capsules_perpendicular.json'))
        report = json.loads(out)
        np.testing.assert_allclose(report['dphi_dr2'], [0, 0, 6], atol=1e-9)
        self.assertLessEqual(report['translation_residual'], 1e-9)
        self.assertEqual(len(report['dphi_dq1']), 4)

    def test_jacobians_parallel_exit_code(self):
        """Test parallel capsules exit with code 3"""
        with self.assertRaises(CommandError) as context:
            self.run_command('jacobians', str(SCENES / 'capsules_parallel.json'))
        self.assertEqual(context.exception.returncode, 3)

    def test_checkgrad_passes(self):
        """Test the gradient check on a generic capsule-polygon scene"""
        out, _ = self.run_command('checkgrad', str(SCENES / 'capsule_hexagon.json'), step=1e-6)
        report = json.loads(out)
        self.assertTrue(report['passed'])
        self.assertLessEqual(report['max_rel_error'], 1e-4)
        self.assertEqual(len(report['coordinates']), 14)

    def test_checkgrad_coarse_step_still_succeeds(self):
        """Test a coarse step reports a larger error without failing"""
        fine, _ = self.run_command('checkgrad', str(SCENES / 'capsule_hexagon.json'), step=1e-6)
        coarse, _ = self.run_command('checkgrad', str(SCENES / 'capsule_hexagon.json'), step=1e-1)
        self.assertGreater(json.loads(coarse)['max_abs_error'], json.loads(fine)['max_abs_error'])

    def test_checkgrad_degenerate_exit_code(self):
        """Test the gradient check propagates nondifferentiable points"""
        with self.assertRaises(CommandError) as context:
            self.run_command('checkgrad', str(SCENES / 'capsules_parallel.json'))
        self.assertEqual(context.exception.returncode, 3)
