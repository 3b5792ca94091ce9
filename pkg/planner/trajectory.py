"""
Collision-aware trajectory optimization by single shooting.

The controls are the decision variables; states follow from an RK4
rollout. The objective is

    J(U) = 1/2 sum_i w_i (x_N - goal)_i^2            goal tracking
         + 1/2 rho sum_k |u_k|^2                     control effort
         + w_p sum_k sum_obstacles max(0, margin - phi_k)^2
         + w_p sum_k max(0, |gamma_k| - gamma_max)^2

minimized by projected gradient descent on the control box with an
Armijo backtracking line search, raising w_p between rounds. Each point
solves one proximity QP per knot and obstacle; the gradient of phi comes
from those same solutions and is chained through the rollout with the RK4
Jacobians.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from django.core.exceptions import ValidationError

from collision.detection import proximity
from core.conf import get_planner_setting
from core.exceptions import InvalidStateError, NondifferentiablePointError, PlanningFailureError
from core.utils.validators import validate_matrix

from .dynamics import (
    CONTROL_SIZE,
    STATE_SIZE,
    CarState,
    car_pose_capsule,
    car_quaternion_derivative,
    rk4_jacobians,
    rollout,
)

logger = logging.getLogger(__name__)

# Inner loop stops once the projected gradient step is this small
STATIONARITY_TOL = 1e-6

MAX_BACKTRACKS = 40
MIN_STEP, MAX_STEP = 1e-10, 1e3


@dataclass(frozen=True, eq=False)
class PlanProblem:
    """Start, goal, obstacles and optimizer settings of one planning run."""

    x0: CarState
    goal: CarState
    obstacles: tuple = ()
    N: int = 60
    dt: float = 0.1
    wheelbase: float = 1.0
    car_length: float = 1.0
    car_radius: float = 0.3
    margin: float = 0.0
    gamma_max: float = 0.5
    u_bounds: tuple = ((-4.0, 4.0), (-1.5, 1.5))
    goal_weights: tuple = (100.0, 100.0, 10.0, 10.0, 1.0)
    control_weight: float = 0.1
    penalty_weight: float = 10.0
    penalty_growth: float = 10.0
    outer_rounds: int = 5
    inner_iterations: int = 200
    armijo_c: float = 1e-4
    backtrack_factor: float = 0.5
    goal_tolerance: float = 0.1
    phi_tolerance: float = 1e-4

    def __post_init__(self):
        if not isinstance(self.x0, CarState) or not isinstance(self.goal, CarState):
            raise ValidationError('x0 and goal must be CarState values')
        if int(self.N) != self.N or self.N < 2:
            raise ValidationError(f'N must be an integer >= 2, got {self.N!r}')
        if not self.dt > 0.0:
            raise ValidationError(f'dt must be positive, got {self.dt!r}')
        for name in ('wheelbase', 'car_length', 'car_radius', 'gamma_max', 'penalty_weight'):
            if not getattr(self, name) > 0.0:
                raise ValidationError(f'{name} must be positive, got {getattr(self, name)!r}')
        if self.gamma_max >= 0.5 * math.pi:
            raise ValidationError(f'gamma_max must be below pi/2, got {self.gamma_max!r}')
        if int(self.outer_rounds) != self.outer_rounds or self.outer_rounds < 1:
            raise ValidationError(f'outer_rounds must be an integer >= 1, got {self.outer_rounds!r}')
        if int(self.inner_iterations) != self.inner_iterations or self.inner_iterations < 0:
            raise ValidationError(f'inner_iterations must be an integer >= 0, got {self.inner_iterations!r}')
        if self.margin < 0.0 or self.penalty_growth < 1.0:
            raise ValidationError('margin must be >= 0 and penalty_growth >= 1')
        if not 0.0 < self.backtrack_factor < 1.0 or not 0.0 < self.armijo_c < 1.0:
            raise ValidationError('backtrack_factor and armijo_c must lie in (0, 1)')

        bounds = np.asarray(self.u_bounds, dtype=float)
        if bounds.shape != (CONTROL_SIZE, 2) or np.any(bounds[:, 0] > bounds[:, 1]):
            raise ValidationError('u_bounds must be [[u1_min, u1_max], [u2_min, u2_max]]')
        if np.asarray(self.goal_weights).shape != (STATE_SIZE,):
            raise ValidationError(f'goal_weights must have {STATE_SIZE} entries')
        if abs(self.x0.gamma) > self.gamma_max:
            raise ValidationError(f'Initial steering angle exceeds gamma_max={self.gamma_max}')

        object.__setattr__(self, 'N', int(self.N))
        object.__setattr__(self, 'outer_rounds', int(self.outer_rounds))
        object.__setattr__(self, 'inner_iterations', int(self.inner_iterations))
        object.__setattr__(self, 'obstacles', tuple(self.obstacles))
        for obstacle in self.obstacles:
            if getattr(obstacle, 'kind', None) != 'capsule':
                raise ValidationError('Obstacles must be capsules')
            phi = proximity(self.car_capsule(self.x0), obstacle).phi
            if phi <= 0.0:
                raise ValidationError(f'Initial state collides with an obstacle (phi={phi:.6g})')

    @classmethod
    def from_settings(cls, x0, goal, obstacles=(), **overrides):
        """Build a problem with DIFFPROX_PLANNER defaults, overridden by keyword."""
        defaults = {
            'N': get_planner_setting('N', 60),
            'dt': get_planner_setting('DT', 0.1),
            'wheelbase': get_planner_setting('WHEELBASE', 1.0),
            'car_length': get_planner_setting('CAR_LENGTH', 1.0),
            'car_radius': get_planner_setting('CAR_RADIUS', 0.3),
            'margin': get_planner_setting('MARGIN', 0.0),
            'gamma_max': get_planner_setting('GAMMA_MAX', 0.5),
            'u_bounds': tuple(map(tuple, get_planner_setting('U_BOUNDS', [[-4.0, 4.0], [-1.5, 1.5]]))),
            'goal_weights': tuple(get_planner_setting('GOAL_WEIGHTS', [100.0, 100.0, 10.0, 10.0, 1.0])),
            'control_weight': get_planner_setting('CONTROL_WEIGHT', 0.1),
            'penalty_weight': get_planner_setting('PENALTY_WEIGHT', 10.0),
            'penalty_growth': get_planner_setting('PENALTY_GROWTH', 10.0),
            'outer_rounds': get_planner_setting('OUTER_ROUNDS', 5),
            'inner_iterations': get_planner_setting('INNER_ITERATIONS', 200),
            'armijo_c': get_planner_setting('ARMIJO_C', 1e-4),
            'backtrack_factor': get_planner_setting('BACKTRACK_FACTOR', 0.5),
            'goal_tolerance': get_planner_setting('GOAL_TOLERANCE', 0.1),
            'phi_tolerance': get_planner_setting('PHI_TOLERANCE', 1e-4),
        }
        defaults.update({key: value for key, value in overrides.items() if value is not None})
        return cls(x0=x0, goal=goal, obstacles=tuple(obstacles), **defaults)

    def car_capsule(self, x):
        return car_pose_capsule(x, self.car_length, self.car_radius)

    @property
    def horizon(self):
        return (self.N - 1) * self.dt


@dataclass(frozen=True, eq=False)
class Trajectory:
    """
    States, controls and per-knot proximity of a planned motion

    ``phis`` holds the smallest phi over all obstacles at each knot (inf
    without obstacles). ``objective_history`` has one list per penalty
    round with J at the start and after every accepted step.
    """

    states: np.ndarray
    controls: np.ndarray
    phis: np.ndarray
    goal: CarState
    iterations: int = 0
    rounds: int = 0
    penalty_weight: float = 0.0
    objective_history: list = field(default_factory=list)

    @property
    def min_phi(self):
        return float(np.min(self.phis))

    @property
    def goal_error(self):
        """Distance of the terminal position from the goal position."""
        terminal = self.states[-1]
        return math.hypot(terminal[0] - self.goal.px, terminal[1] - self.goal.py)


def proximity_results(problem, states):
    """ProximityResult of every knot against every obstacle, indexed [k][j]."""
    results = []
    for x in states:
        capsule = problem.car_capsule(x)
        results.append([proximity(capsule, obstacle) for obstacle in problem.obstacles])
    return results


def _phis(results, n_obstacles):
    return np.array([[result.phi for result in row] for row in results]).reshape(len(results), n_obstacles)


def _min_phis(phis):
    if phis.shape[1] == 0:
        return np.full(phis.shape[0], np.inf)
    return phis.min(axis=1)


def warm_start(problem):
    """
    Straight-line controls: accelerate for the first half of the horizon
    and brake for the second, covering the start-goal distance.
    """
    distance = math.hypot(problem.goal.px - problem.x0.px, problem.goal.py - problem.x0.py)
    steps = problem.N - 1
    accel = 4.0 * distance / problem.horizon ** 2
    controls = np.zeros((steps, CONTROL_SIZE))
    half = steps // 2
    controls[:half, 0] = accel
    controls[half:, 0] = -accel
    return _project(problem, controls)


def _project(problem, controls):
    bounds = np.asarray(problem.u_bounds, dtype=float)
    return np.clip(controls, bounds[:, 0], bounds[:, 1])


@dataclass(frozen=True, eq=False)
class ShootingPoint:
    """
    Controls with their rollout, proximity results and J

    ``states`` and ``results`` are None when the rollout left the steering
    domain; ``value`` is then inf.
    """

    controls: np.ndarray
    states: Optional[np.ndarray]
    results: Optional[list]
    phis: Optional[np.ndarray]
    value: float


class ShootingObjective:
    """J(U) and its gradient for a fixed penalty weight."""

    def __init__(self, problem, penalty_weight):
        self.problem = problem
        self.penalty_weight = penalty_weight
        self.goal = problem.goal.as_array()
        self.goal_weights = np.asarray(problem.goal_weights, dtype=float)

    def rollout(self, controls):
        return rollout(self.problem.x0, controls, self.problem.dt, self.problem.wheelbase)

    def evaluate(self, controls):
        """ShootingPoint at controls; one proximity query per knot and obstacle."""
        try:
            states = self.rollout(controls)
        except InvalidStateError:
            return ShootingPoint(controls, None, None, None, math.inf)
        results = proximity_results(self.problem, states)
        phis = _phis(results, len(self.problem.obstacles))
        return ShootingPoint(controls, states, results, phis, self._value(controls, states, phis))

    def value(self, controls):
        """J(U); inf when the rollout leaves the steering domain."""
        return self.evaluate(controls).value

    def _value(self, controls, states, phis):
        problem = self.problem
        error = states[-1] - self.goal
        value = 0.5 * float(self.goal_weights @ error ** 2)
        value += 0.5 * problem.control_weight * float(np.sum(controls ** 2))
        violation = np.maximum(0.0, problem.margin - phis[1:])
        value += self.penalty_weight * float(np.sum(violation ** 2))
        excess = np.maximum(0.0, np.abs(states[1:, 4]) - problem.gamma_max)
        value += self.penalty_weight * float(np.sum(excess ** 2))
        return value

    def _collision_gradient(self, x, result, violation):
        """d/dx of w_p (margin - phi)^2 at one knot."""
        try:
            jacobians = result.jacobians()
        except NondifferentiablePointError as exc:
            logger.info('Using direct partials at a nondifferentiable knot: %s', exc)
            jacobians = result.jacobians(through_qp=False)

        dphi_dx = np.zeros(STATE_SIZE)
        dphi_dx[0] = jacobians.dphi_dr1[0]
        dphi_dx[1] = jacobians.dphi_dr1[1]
        dphi_dx[2] = jacobians.dphi_dq1 @ car_quaternion_derivative(x[2])
        return -2.0 * self.penalty_weight * violation * dphi_dx

    def gradient(self, controls):
        """
        J and dJ/dU at controls

        Raises:
            InvalidStateError: If the rollout leaves the steering domain
        """
        return self.point_gradient(self.evaluate(controls))

    def point_gradient(self, point):
        """
        J and dJ/dU at an evaluated point by the adjoint recursion

            lam_{N-1} = dJ/dx_{N-1},  lam_k = dJ/dx_k + Fx_k' lam_{k+1},
            dJ/du_k = Fu_k' lam_{k+1} + rho u_k

        The proximity results of the point are differentiated in place, so
        no QP is solved again.
        """
        if point.states is None:
            raise InvalidStateError('Cannot differentiate a rollout outside the steering domain')
        problem = self.problem
        controls, states = point.controls, point.states
        steps = controls.shape[0]
        Fx = np.empty((steps, STATE_SIZE, STATE_SIZE))
        Fu = np.empty((steps, STATE_SIZE, CONTROL_SIZE))
        for k in range(steps):
            _, Fx[k], Fu[k] = rk4_jacobians(states[k], controls[k], problem.dt, problem.wheelbase)

        state_grads = np.zeros_like(states)
        state_grads[-1] += self.goal_weights * (states[-1] - self.goal)
        for k in range(1, states.shape[0]):
            x = states[k]
            for j, result in enumerate(point.results[k]):
                violation = problem.margin - point.phis[k, j]
                if violation > 0.0:
                    state_grads[k] += self._collision_gradient(x, result, violation)
            excess = abs(x[4]) - problem.gamma_max
            if excess > 0.0:
                state_grads[k, 4] += 2.0 * self.penalty_weight * excess * math.copysign(1.0, x[4])

        grad = np.empty_like(controls)
        lam = state_grads[-1]
        for k in range(steps - 1, -1, -1):
            grad[k] = Fu[k].T @ lam + problem.control_weight * controls[k]
            lam = state_grads[k] + Fx[k].T @ lam

        return point.value, grad


def _line_search(objective, point, grad, step):
    """
    Projected Armijo backtracking from the trial step

    Returns:
        ShootingPoint: The accepted point, or None
    """
    problem = objective.problem
    controls = point.controls
    for _ in range(MAX_BACKTRACKS):
        candidate = _project(problem, controls - step * grad)
        change = candidate - controls
        if not np.any(change):
            return None
        trial = objective.evaluate(candidate)
        if trial.value <= point.value + problem.armijo_c * float(np.sum(grad * change)):
            return trial
        step *= problem.backtrack_factor
        if step < MIN_STEP:
            break
    return None


def _minimize(objective, controls, max_iterations):
    """Projected gradient descent with Barzilai-Borwein trial steps."""
    point = objective.evaluate(controls)
    value, grad = objective.point_gradient(point)
    history = [value]
    step = 1.0 / max(1.0, float(np.max(np.abs(grad))))
    iterations = 0

    for _ in range(max_iterations):
        projected = _project(objective.problem, point.controls - grad) - point.controls
        if float(np.max(np.abs(projected))) < STATIONARITY_TOL:
            break

        accepted = _line_search(objective, point, grad, step)
        if accepted is None:
            logger.debug('Line search failed after %d iterations', iterations)
            break
        new_value, new_grad = objective.point_gradient(accepted)

        s = (accepted.controls - point.controls).ravel()
        y = (new_grad - grad).ravel()
        curvature = float(s @ y)
        step = float(s @ s) / curvature if curvature > 0.0 else step * 2.0
        step = min(max(step, MIN_STEP), MAX_STEP)

        point, grad = accepted, new_grad
        history.append(new_value)
        iterations += 1

    return point, history, iterations


def plan(problem, initial_controls=None):
    """
    Plan a collision-free trajectory to the goal

    Args:
        problem: PlanProblem
        initial_controls: Optional (N - 1, 2) warm start; defaults to a
            straight-line accelerate-then-brake profile

    Returns:
        Trajectory with min phi >= -phi_tolerance and the terminal position
        within goal_tolerance

    Raises:
        ValidationError: If initial_controls is not a finite (N - 1, 2) array
        PlanningFailureError: If the rounds run out first; carries the
            final trajectory
    """
    if initial_controls is None:
        controls = warm_start(problem)
    else:
        shape = (problem.N - 1, CONTROL_SIZE)
        controls = _project(problem, validate_matrix(initial_controls, shape, 'initial_controls'))

    weight = problem.penalty_weight
    histories = []
    iterations = 0
    trajectory = None

    for round_index in range(problem.outer_rounds):
        objective = ShootingObjective(problem, weight)
        point, history, inner = _minimize(objective, controls, problem.inner_iterations)
        histories.append(history)
        iterations += inner

        controls = point.controls
        trajectory = Trajectory(
            states=point.states,
            controls=controls,
            phis=_min_phis(point.phis),
            goal=problem.goal,
            iterations=iterations,
            rounds=round_index + 1,
            penalty_weight=weight,
            objective_history=list(histories),
        )
        logger.info(
            'Round %d: weight %.3g, J %.6g, min phi %.3e, goal error %.3e, %d iterations',
            round_index + 1, weight, history[-1], trajectory.min_phi, trajectory.goal_error, inner,
        )

        if trajectory.min_phi >= -problem.phi_tolerance and trajectory.goal_error <= problem.goal_tolerance:
            return trajectory
        weight *= problem.penalty_growth

    raise PlanningFailureError(
        f'Planning failed after {problem.outer_rounds} rounds: min phi {trajectory.min_phi:.6g}, '
        f'goal error {trajectory.goal_error:.6g}',
        trajectory=trajectory,
    )
