"""
Test Suite for Planner App
Contains unit tests and integration tests for:
- Kinematic car dynamics and the RK4 discretization
- The car capsule embedding
- The shooting objective and its adjoint gradient
- Planning runs, config loading and the plan command
"""

import csv
import json
import math
import tempfile
import time
from io import StringIO
from pathlib import Path

import numpy as np
from django.conf import settings
from django.core.exceptions import ValidationError
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from core.exceptions import InvalidStateError, PlanningFailureError
from geometry.polygons import regular_polygon
from geometry.shapes import Capsule, PaddedPolygon, Pose
from geometry.transforms import quat_to_rotmat

from .configs import load_plan_config, parse_plan_config
from .dynamics import (
    CarState,
    car_dynamics,
    car_pose_capsule,
    rk4_jacobians,
    rk4_step,
    rollout,
)
from .trajectory import PlanProblem, ShootingObjective, plan, warm_start

CONFIGS = settings.BASE_DIR / 'configs'


def yaw_quaternion(angle):
    return (math.cos(0.5 * angle), 0.0, 0.0, math.sin(0.5 * angle))


class CarDynamicsTest(SimpleTestCase):
    """Test cases for the continuous-time car model"""

    def test_straight_line_derivative(self):
        """Test psi=0, v=1, gamma=0 gives (1, 0, 0, u1, u2)"""
        xdot = car_dynamics(CarState(0, 0, 0, 1, 0), (1.0, 0.1), wheelbase=1.0)
        np.testing.assert_allclose(xdot, [1.0, 0.0, 0.0, 1.0, 0.1], atol=1e-15)

    def test_heading_alignment(self):
        """Test the velocity follows the heading"""
        xdot = car_dynamics(CarState(0, 0, math.pi / 2, 2, 0), (0.0, 0.0), wheelbase=1.0)
        np.testing.assert_allclose(xdot[:2], [0.0, 2.0], atol=1e-15)

    def test_at_rest(self):
        """Test a car at rest without input stays put"""
        xdot = car_dynamics(CarState(1.0, -2.0, 0.7, 0.0, 0.3), (0.0, 0.0), wheelbase=1.0)
        np.testing.assert_array_equal(xdot, np.zeros(5))

    def test_heading_rate(self):
        """Test psi' = v tan(gamma) / wheelbase"""
        xdot = car_dynamics(CarState(0, 0, 0, 2.0, 0.3), (0.0, 0.0), wheelbase=2.5)
        self.assertAlmostEqual(xdot[2], 2.0 * math.tan(0.3) / 2.5, places=15)

    def test_steering_domain(self):
        """Test |gamma| >= pi/2 is rejected"""
        with self.assertRaises(InvalidStateError):
            car_dynamics(CarState(0, 0, 0, 1, math.pi / 2), (0.0, 0.0), wheelbase=1.0)

    def test_non_finite_state_rejected(self):
        """Test car states must be finite"""
        with self.assertRaises(ValidationError):
            CarState(0, float('nan'), 0, 0, 0)


class RungeKuttaTest(SimpleTestCase):
    """Test cases for the RK4 step, rollout and step Jacobians"""

    def test_rest_is_fixed_point(self):
        """Test u=0, v=0 leaves the state unchanged"""
        x = CarState(1.0, 2.0, 0.3, 0.0, 0.1)
        self.assertEqual(rk4_step(x, (0.0, 0.0), 0.1, 1.0), x)

    def test_constant_velocity(self):
        """Test one step at v=1 along x advances px by 0.1"""
        x = rk4_step(CarState(0, 0, 0, 1, 0), (0.0, 0.0), 0.1, 1.0)
        self.assertAlmostEqual(x.px, 0.1, places=15)
        self.assertEqual(x.py, 0.0)

    def test_fourth_order_accuracy(self):
        """Test halving dt shrinks the error about 16 times"""
        x0 = CarState(0.0, 0.0, 0.3, 2.0, 0.2)
        u = (0.5, 0.3)

        def terminal(dt):
            steps = int(round(1.0 / dt))
            return rollout(x0, np.tile(u, (steps, 1)), dt, 1.0)[-1]

        reference = terminal(1e-4)
        coarse = np.linalg.norm(terminal(0.1) - reference)
        fine = np.linalg.norm(terminal(0.05) - reference)
        self.assertGreater(coarse / fine, 12.0)
        self.assertLess(coarse / fine, 20.0)

    def test_step_jacobians(self):
        """Test analytic RK4 Jacobians against central differences"""
        x = np.array([0.3, -0.2, 0.4, 1.5, 0.2])
        u = np.array([0.3, -0.2])
        x_next, Fx, Fu = rk4_jacobians(x, u, 0.1, 1.0)
        np.testing.assert_array_equal(x_next, rk4_step(x, u, 0.1, 1.0).as_array())

        h = 1e-6
        for i in range(5):
            e = np.zeros(5)
            e[i] = h
            column = (rk4_step(x + e, u, 0.1, 1.0).as_array() - rk4_step(x - e, u, 0.1, 1.0).as_array()) / (2 * h)
            np.testing.assert_allclose(Fx[:, i], column, atol=1e-8)
        for i in range(2):
            e = np.zeros(2)
            e[i] = h
            column = (rk4_step(x, u + e, 0.1, 1.0).as_array() - rk4_step(x, u - e, 0.1, 1.0).as_array()) / (2 * h)
            np.testing.assert_allclose(Fu[:, i], column, atol=1e-8)


class CarCapsuleTest(SimpleTestCase):
    """Test cases for the car body capsule"""

    def test_heading_zero(self):
        """Test the capsule lies along world x at psi=0"""
        a, b = car_pose_capsule(CarState(0, 0, 0, 0, 0), 1.0, 0.3).endpoints
        np.testing.assert_allclose(a, [0.5, 0.0, 0.0], atol=1e-15)
        np.testing.assert_allclose(b, [-0.5, 0.0, 0.0], atol=1e-15)

    def test_heading_quarter_turn(self):
        """Test the capsule lies along world y at psi=pi/2"""
        a, b = car_pose_capsule(CarState(2, 3, math.pi / 2, 0, 0), 2.0, 0.3).endpoints
        np.testing.assert_allclose(a - b, [0.0, 2.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(0.5 * (a + b), [2.0, 3.0, 0.0], atol=1e-12)

    def test_axis_follows_heading(self):
        """Test the body axis equals (cos psi, sin psi, 0)"""
        rng = np.random.default_rng(3)
        for psi in rng.uniform(-np.pi, np.pi, 50):
            capsule = car_pose_capsule(CarState(0, 0, psi, 0, 0), 1.0, 0.3)
            axis = quat_to_rotmat(capsule.pose.q)[:, 0]
            np.testing.assert_allclose(axis, [math.cos(psi), math.sin(psi), 0.0], atol=1e-12)


class PlanProblemTest(SimpleTestCase):
    """Test cases for planning problem validation"""

    def setUp(self):
        self.x0 = CarState(0, 0, 0, 0, 0)
        self.goal = CarState(12, 0, 0, 0, 0)
        self.bus = Capsule(Pose([6.0, -0.3, 0.0]), 3.0, 0.6)

    def test_settings_defaults(self):
        """Test defaults come from DIFFPROX_PLANNER"""
        problem = PlanProblem.from_settings(self.x0, self.goal, [self.bus])
        self.assertEqual(problem.N, settings.DIFFPROX_PLANNER['N'])
        self.assertEqual(problem.dt, settings.DIFFPROX_PLANNER['DT'])
        self.assertAlmostEqual(problem.horizon, (problem.N - 1) * problem.dt)

    def test_overrides_win(self):
        """Test keyword overrides replace settings, None keeps them"""
        problem = PlanProblem.from_settings(self.x0, self.goal, N=10, margin=None)
        self.assertEqual(problem.N, 10)
        self.assertEqual(problem.margin, settings.DIFFPROX_PLANNER['MARGIN'])

    def test_too_few_knots(self):
        """Test N must be at least 2"""
        with self.assertRaises(ValidationError):
            PlanProblem.from_settings(self.x0, self.goal, N=1)

    def test_colliding_start_rejected(self):
        """Test the initial state must be collision-free"""
        with self.assertRaises(ValidationError):
            PlanProblem.from_settings(CarState(6.0, 0.0, 0, 0, 0), self.goal, [self.bus])

    def test_polygon_obstacle_rejected(self):
        """Test obstacles must be capsules"""
        C, d = regular_polygon(4, 1.0)
        tile = PaddedPolygon(Pose([6.0, 5.0, 0.0]), C, d, 0.1)
        with self.assertRaises(ValidationError):
            PlanProblem.from_settings(self.x0, self.goal, [tile])

    def test_steering_bound_below_right_angle(self):
        """Test gamma_max must stay inside the dynamics' domain"""
        with self.assertRaises(ValidationError):
            PlanProblem.from_settings(self.x0, self.goal, gamma_max=2.0)

    def test_warm_start_covers_distance(self):
        """Test the warm start drives roughly to the goal"""
        problem = PlanProblem.from_settings(self.x0, self.goal)
        controls = warm_start(problem)
        self.assertEqual(controls.shape, (problem.N - 1, 2))
        states = rollout(problem.x0, controls, problem.dt, problem.wheelbase)
        self.assertAlmostEqual(states[-1, 0], 12.0, delta=0.6)
        np.testing.assert_array_equal(states[:, 1], 0.0)


class ShootingObjectiveTest(SimpleTestCase):
    """Test cases for the objective value and adjoint gradient"""

    def setUp(self):
        rng = np.random.default_rng(11)
        obstacle = Capsule(Pose([3.0, 1.5, 0.0], yaw_quaternion(0.7)), 2.0, 0.4)
        self.problem = PlanProblem.from_settings(
            CarState(0.0, 0.0, 0.2, 1.0, 0.05),
            CarState(0.8, 0.2, 0.2, 1.0, 0.0),
            [obstacle],
            N=8,
            margin=10.0,
            penalty_weight=1.0,
        )
        self.controls = np.column_stack([
            rng.uniform(-0.5, 0.5, self.problem.N - 1),
            rng.uniform(-0.3, 0.3, self.problem.N - 1),
        ])
        self.objective = ShootingObjective(self.problem, self.problem.penalty_weight)

    def test_gradient_matches_finite_differences(self):
        """Test the adjoint gradient against central differences of J"""
        value, grad = self.objective.gradient(self.controls)
        self.assertEqual(value, self.objective.value(self.controls))

        h = 1e-6
        fd = np.zeros_like(self.controls)
        for index in np.ndindex(*self.controls.shape):
            step = np.zeros_like(self.controls)
            step[index] = h
            fd[index] = (self.objective.value(self.controls + step)
                         - self.objective.value(self.controls - step)) / (2 * h)
        np.testing.assert_allclose(grad, fd, rtol=1e-4, atol=1e-6)

    def test_penalty_active(self):
        """Test the margin makes the collision penalty contribute"""
        free = ShootingObjective(self.problem, 0.0)
        self.assertGreater(self.objective.value(self.controls), free.value(self.controls))

    def test_invalid_rollout_is_infinite(self):
        """Test a rollout leaving the steering domain has infinite cost"""
        controls = self.controls.copy()
        controls[:, 1] = 1e3
        self.assertEqual(self.objective.value(controls), math.inf)

    def test_point_gradient_reuses_results(self):
        """Test differentiating an evaluated point matches a fresh gradient"""
        point = self.objective.evaluate(self.controls)
        self.assertEqual(len(point.results), self.problem.N)
        self.assertEqual(point.phis.shape, (self.problem.N, 1))
        self.assertEqual(point.phis[3, 0], point.results[3][0].phi)

        value, grad = self.objective.point_gradient(point)
        fresh_value, fresh_grad = self.objective.gradient(self.controls)
        self.assertEqual(value, fresh_value)
        np.testing.assert_array_equal(grad, fresh_grad)

    def test_invalid_point_not_differentiated(self):
        """Test the gradient of a rollout outside the steering domain raises"""
        controls = self.controls.copy()
        controls[:, 1] = 1e3
        point = self.objective.evaluate(controls)
        self.assertIsNone(point.states)
        with self.assertRaises(InvalidStateError):
            self.objective.point_gradient(point)
        with self.assertRaises(InvalidStateError):
            self.objective.gradient(controls)


class OpenRoadPlanTest(SimpleTestCase):
    """Test cases for planning without a blocking obstacle"""

    def test_straight_path_without_penalty(self):
        """Test a far obstacle leaves a straight path and zero penalty"""
        problem = load_plan_config(CONFIGS / 'plan_open_road.json')
        trajectory = plan(problem)

        self.assertLessEqual(trajectory.goal_error, problem.goal_tolerance)
        self.assertTrue(np.all(trajectory.phis > problem.margin))
        self.assertLess(float(np.max(np.abs(trajectory.states[:, 1]))), 1e-6)

    def test_no_obstacles(self):
        """Test phi is infinite at every knot without obstacles"""
        problem = PlanProblem.from_settings(CarState(0, 0, 0, 0, 0), CarState(5, 0, 0, 0, 0), N=40)
        trajectory = plan(problem)
        self.assertEqual(trajectory.min_phi, math.inf)
        self.assertLessEqual(trajectory.goal_error, problem.goal_tolerance)

    def test_initial_controls_shape(self):
        """Test misshapen or ragged initial controls are validation errors"""
        problem = PlanProblem.from_settings(CarState(0, 0, 0, 0, 0), CarState(5, 0, 0, 0, 0), N=10)
        for controls in (np.zeros((9, 3)), np.zeros((8, 2)), [[0.0, 0.0], [1.0]], np.full((9, 2), np.nan)):
            with self.assertRaises(ValidationError):
                plan(problem, controls)

    def test_initial_controls_projected(self):
        """Test initial controls outside the box are clipped before planning"""
        problem = PlanProblem.from_settings(
            CarState(0, 0, 0, 0, 0), CarState(5, 0, 0, 0, 0), N=40, inner_iterations=0, outer_rounds=1
        )
        controls = np.tile([100.0, 0.0], (problem.N - 1, 1))
        with self.assertRaises(PlanningFailureError) as context:
            plan(problem, controls)
        np.testing.assert_array_equal(context.exception.trajectory.controls[:, 0], 4.0)


class DemoPlanTest(SimpleTestCase):
    """Test cases for the bundled bus-avoidance run"""

    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        cls.problem = load_plan_config(CONFIGS / 'plan_demo.json')
        started = time.perf_counter()
        cls.trajectory = plan(cls.problem)
        cls.elapsed = time.perf_counter() - started

    def test_completes_within_a_minute(self):
        """Test the demo plans in under 60 seconds"""
        self.assertLess(self.elapsed, 60.0)

    def test_collision_free_at_goal(self):
        """Test min phi and terminal error meet the tolerances"""
        self.assertGreaterEqual(self.trajectory.min_phi, -1e-4)
        self.assertLessEqual(self.trajectory.goal_error, 0.1)

    def test_deviates_around_obstacle(self):
        """Test the path leaves the straight start-goal line"""
        states = self.trajectory.states
        line = -states[:, 0] / 12.0
        self.assertGreater(float(np.max(np.abs(states[:, 1] - line))), 0.5)

    def test_rollout_consistency(self):
        """Test re-integrating the controls reproduces the states"""
        states = rollout(self.problem.x0, self.trajectory.controls, self.problem.dt, self.problem.wheelbase)
        np.testing.assert_allclose(states, self.trajectory.states, atol=1e-10, rtol=0)

    def test_controls_within_bounds(self):
        """Test every control respects its box"""
        bounds = np.asarray(self.problem.u_bounds)
        self.assertTrue(np.all(self.trajectory.controls >= bounds[:, 0]))
        self.assertTrue(np.all(self.trajectory.controls <= bounds[:, 1]))

    def test_objective_monotone(self):
        """Test J never increases over accepted steps within a round"""
        for history in self.trajectory.objective_history:
            self.assertTrue(np.all(np.diff(history) <= 0.0))

    def test_margin_increases_clearance(self):
        """Test a larger margin does not reduce the minimum phi"""
        wider = PlanProblem.from_settings(
            self.problem.x0, self.problem.goal, self.problem.obstacles, margin=0.2
        )
        self.assertGreaterEqual(plan(wider).min_phi, self.trajectory.min_phi - 1e-4)


class PlanConfigTest(SimpleTestCase):
    """Test cases for planning config files"""

    def config(self, **changes):
        document = json.loads((CONFIGS / 'plan_demo.json').read_text())
        document.update(changes)
        return json.dumps(document)

    def test_bundled_demo(self):
        """Test the demo config loads with one bus obstacle"""
        problem = load_plan_config(CONFIGS / 'plan_demo.json')
        self.assertEqual(len(problem.obstacles), 1)
        self.assertEqual(problem.obstacles[0].L, 3.0)
        self.assertEqual(problem.goal, CarState(12.0, -1.0, 0.0, 0.0, 0.0))

    def test_planner_overrides(self):
        """Test the planner object overrides the defaults"""
        problem = parse_plan_config(self.config(planner={'N': 30, 'u_bounds': [[-2, 2], [-1, 1]]}))
        self.assertEqual(problem.N, 30)
        self.assertEqual(problem.u_bounds, ((-2, 2), (-1, 1)))

    def test_obstacle_size_defaults(self):
        """Test obstacles without L and R take the planner's bus size"""
        obstacles = [{'name': 'bus', 'kind': 'capsule', 'r': [6.0, -0.3, 0.0]}]
        problem = parse_plan_config(self.config(obstacles=obstacles))
        self.assertEqual(problem.obstacles[0].L, settings.DIFFPROX_PLANNER['OBSTACLE_LENGTH'])
        self.assertEqual(problem.obstacles[0].R, settings.DIFFPROX_PLANNER['OBSTACLE_RADIUS'])

    def test_unknown_planner_setting(self):
        """Test unknown planner keys are rejected"""
        with self.assertRaises(ValidationError):
            parse_plan_config(self.config(planner={'horizon': 3}))

    def test_polygon_obstacle(self):
        """Test padded polygon obstacles are rejected with their name"""
        obstacles = [{'name': 'tile', 'kind': 'padded_polygon', 'r': [6, 5, 0], 'R': 0.1,
                      'regular_ngon': {'n': 4, 'circumradius': 1.0}}]
        with self.assertRaises(ValidationError) as context:
            parse_plan_config(self.config(obstacles=obstacles), source='plan.json')
        self.assertIn("obstacles[0] 'tile'", context.exception.messages[0])
        self.assertIn('plan.json', context.exception.messages[0])

    def test_bad_state(self):
        """Test car states need numeric px and py"""
        with self.assertRaises(ValidationError):
            parse_plan_config(self.config(x0={'px': 'left', 'py': 0}))
        with self.assertRaises(ValidationError):
            parse_plan_config(self.config(goal={'px': 1, 'py': 0, 'speed': 2}))

    def test_start_inside_obstacle(self):
        """Test a colliding start is a validation error"""
        with self.assertRaises(ValidationError):
            parse_plan_config(self.config(x0={'px': 6.0, 'py': -0.3}))

    def test_malformed_json(self):
        """Test JSON syntax errors report the line"""
        with self.assertRaises(ValidationError) as context:
            parse_plan_config('{\n"x0": ,\n}', source='plan.json')
        self.assertIn('line 2', context.exception.messages[0])


class PlanCommandTest(SimpleTestCase):
    """Test cases for the plan command"""

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.out = Path(self.tmp.name) / 'traj.csv'

    def tearDown(self):
        self.tmp.cleanup()

    def run_command(self, config):
        out, err = StringIO(), StringIO()
        call_command('plan', str(CONFIGS / config), out=str(self.out), stdout=out, stderr=err)
        return out.getvalue()

    def read_rows(self):
        with self.out.open(newline='') as handle:
            return list(csv.reader(handle))

    def test_open_road_csv(self):
        """Test the CSV layout and the summary line"""
        report = json.loads(self.run_command('plan_open_road.json'))
        self.assertEqual(report['status'], 'ok')
        self.assertLessEqual(report['goal_error'], 0.1)
        self.assertEqual(report['planner']['N'], 60)

        rows = self.read_rows()
        self.assertEqual(rows[0], ['k', 't', 'px', 'py', 'psi', 'v', 'gamma', 'u1', 'u2', 'phi'])
        self.assertEqual(len(rows), 61)
        self.assertEqual(rows[-1][7:9], ['', ''])
        self.assertAlmostEqual(float(rows[-1][1]), 5.9, places=12)

    def test_demo_succeeds(self):
        """Test the bundled demo exits 0 collision-free"""
        report = json.loads(self.run_command('plan_demo.json'))
        self.assertGreaterEqual(report['min_phi'], -1e-4)
        self.assertGreaterEqual(min(float(row[9]) for row in self.read_rows()[1:]), -1e-4)

    def test_goal_inside_obstacle_fails(self):
        """Test an unreachable goal exits with code 4 and keeps the trajectory"""
        with self.assertRaises(CommandError) as context:
            self.run_command('plan_goal_in_bus.json')
        self.assertEqual(context.exception.returncode, 4)
        self.assertIn('Planning failed', str(context.exception))
        self.assertEqual(len(self.read_rows()), 61)

    def test_missing_config(self):
        """Test an unreadable config exits with code 2"""
        with self.assertRaises(CommandError) as context:
            self.run_command('missing.json')
        self.assertEqual(context.exception.returncode, 2)
