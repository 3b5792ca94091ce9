"""
Kinematic car model.

State  x = (px, py, psi, v, gamma): position, heading, speed, steering angle
Control u = (u1, u2): acceleration and steering-angle rate

    px' = v cos(psi)      psi' = v tan(gamma) / wheelbase
    py' = v sin(psi)      v' = u1,   gamma' = u2
"""

import math
from dataclasses import astuple, dataclass

import numpy as np
from django.core.exceptions import ValidationError

from core.exceptions import InvalidStateError
from geometry.shapes import Capsule, Pose

STATE_SIZE = 5
CONTROL_SIZE = 2

# d f / d u is constant
CONTROL_MATRIX = np.array([
    [0.0, 0.0],
    [0.0, 0.0],
    [0.0, 0.0],
    [1.0, 0.0],
    [0.0, 1.0],
])


@dataclass(frozen=True)
class CarState:
    px: float
    py: float
    psi: float
    v: float
    gamma: float

    def __post_init__(self):
        for name, value in zip(('px', 'py', 'psi', 'v', 'gamma'), astuple(self)):
            value = float(value)
            if not math.isfinite(value):
                raise ValidationError(f'Car state {name} must be finite, got {value!r}')
            object.__setattr__(self, name, value)

    def as_array(self):
        return np.array(astuple(self), dtype=float)

    @classmethod
    def from_array(cls, x):
        x = np.asarray(x, dtype=float)
        if x.shape != (STATE_SIZE,):
            raise ValidationError(f'Car state must have {STATE_SIZE} entries, got shape {x.shape}')
        return cls(*x)


def _state_array(x):
    if isinstance(x, CarState):
        return x.as_array()
    return np.asarray(x, dtype=float)


def _check_steering(gamma):
    if abs(gamma) >= 0.5 * math.pi:
        raise InvalidStateError(f'Steering angle {gamma:.6g} rad is outside (-pi/2, pi/2)')


def car_dynamics(x, u, wheelbase):
    """
    State derivative of the kinematic car

    Args:
        x: CarState or 5-vector
        u: (acceleration, steering rate)
        wheelbase: Distance between the axles, meters

    Returns:
        np.ndarray: 5-vector

    Raises:
        InvalidStateError: If |gamma| >= pi/2
    """
    _, _, psi, v, gamma = _state_array(x)
    u = np.asarray(u, dtype=float)
    _check_steering(gamma)
    return np.array([
        v * math.cos(psi),
        v * math.sin(psi),
        v * math.tan(gamma) / wheelbase,
        u[0],
        u[1],
    ])


def dynamics_jacobian(x, wheelbase):
    """d f / d x at state x (d f / d u is CONTROL_MATRIX)."""
    _, _, psi, v, gamma = _state_array(x)
    _check_steering(gamma)
    A = np.zeros((STATE_SIZE, STATE_SIZE))
    A[0, 2] = -v * math.sin(psi)
    A[0, 3] = math.cos(psi)
    A[1, 2] = v * math.cos(psi)
    A[1, 3] = math.sin(psi)
    A[2, 3] = math.tan(gamma) / wheelbase
    A[2, 4] = v / (wheelbase * math.cos(gamma) ** 2)
    return A


def _rk4(x, u, dt, wheelbase):
    k1 = car_dynamics(x, u, wheelbase)
    k2 = car_dynamics(x + 0.5 * dt * k1, u, wheelbase)
    k3 = car_dynamics(x + 0.5 * dt * k2, u, wheelbase)
    k4 = car_dynamics(x + dt * k3, u, wheelbase)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4), (k1, k2, k3)


def rk4_step(x, u, dt, wheelbase):
    """
    One classical Runge-Kutta step

    Returns:
        CarState

    Raises:
        InvalidStateError: If any stage leaves the steering domain
    """
    x_next, _ = _rk4(_state_array(x), u, dt, wheelbase)
    return CarState.from_array(x_next)


def rk4_jacobians(x, u, dt, wheelbase):
    """
    RK4 step with its derivatives

    Returns:
        tuple: (x_next, d x_next / d x, d x_next / d u)
    """
    x = _state_array(x)
    x_next, (k1, k2, k3) = _rk4(x, u, dt, wheelbase)
    eye = np.eye(STATE_SIZE)
    B = CONTROL_MATRIX

    A1 = dynamics_jacobian(x, wheelbase)
    A2 = dynamics_jacobian(x + 0.5 * dt * k1, wheelbase)
    A3 = dynamics_jacobian(x + 0.5 * dt * k2, wheelbase)
    A4 = dynamics_jacobian(x + dt * k3, wheelbase)

    dk1_dx = A1
    dk2_dx = A2 @ (eye + 0.5 * dt * dk1_dx)
    dk3_dx = A3 @ (eye + 0.5 * dt * dk2_dx)
    dk4_dx = A4 @ (eye + dt * dk3_dx)

    dk1_du = B
    dk2_du = A2 @ (0.5 * dt * dk1_du) + B
    dk3_du = A3 @ (0.5 * dt * dk2_du) + B
    dk4_du = A4 @ (dt * dk3_du) + B

    Fx = eye + dt / 6.0 * (dk1_dx + 2.0 * dk2_dx + 2.0 * dk3_dx + dk4_dx)
    Fu = dt / 6.0 * (dk1_du + 2.0 * dk2_du + 2.0 * dk3_du + dk4_du)
    return x_next, Fx, Fu


def rollout(x0, controls, dt, wheelbase):
    """
    Integrate a control sequence

    Args:
        x0: Initial CarState or 5-vector
        controls: (N - 1, 2) array

    Returns:
        np.ndarray: (N, 5) states, starting with x0
    """
    controls = np.asarray(controls, dtype=float)
    states = np.empty((controls.shape[0] + 1, STATE_SIZE))
    states[0] = _state_array(x0)
    for k, u in enumerate(controls):
        states[k + 1], _ = _rk4(states[k], u, dt, wheelbase)
    return states


def car_quaternion(psi):
    """Rotation by psi about the world z axis."""
    return np.array([math.cos(0.5 * psi), 0.0, 0.0, math.sin(0.5 * psi)])


def car_quaternion_derivative(psi):
    """d q / d psi of car_quaternion."""
    return np.array([-0.5 * math.sin(0.5 * psi), 0.0, 0.0, 0.5 * math.cos(0.5 * psi)])


def car_pose_capsule(x, L, R):
    """Capsule of the car body: centered at (px, py, 0), axis along the heading."""
    px, py, psi, _, _ = _state_array(x)
    return Capsule(Pose([px, py, 0.0], car_quaternion(psi)), L, R)
