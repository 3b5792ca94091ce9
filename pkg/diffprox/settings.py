"""
Django settings for the diffprox project.

diffprox has no web surface: Django provides the settings layer, the
management-command CLI (`manage.py proximity|jacobians|checkgrad|plan`),
form-based input validation and the test runner.

For the full list of settings and their values, see
https://docs.djangoproject.com/en/4.2/ref/settings/
"""

import os
from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.environ.get(
    'DJANGO_SECRET_KEY',
    'django-insecure-diffprox-local-only-key',
)

DEBUG = os.environ.get('DJANGO_DEBUG', '') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'core',
    'geometry',
    'qp',
    'collision',
    'planner',
]

# No database: every computation is a pure function of its inputs.
DATABASES = {}

USE_I18N = False

USE_TZ = True

TIME_ZONE = 'UTC'

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# ============================================================
# SOLVER
# ============================================================

# Interior-point termination tolerance on max(stationarity, primal, mu)
DIFFPROX_TOL = float(os.environ.get('DIFFPROX_TOL', '1e-10'))
DIFFPROX_MAX_ITER = 30
DIFFPROX_STEP_FRACTION = 0.99
DIFFPROX_KKT_REGULARIZATION = 1e-10
DIFFPROX_PIVOT_TOL = 1e-14
DIFFPROX_POLISH = True

# Two-variable active-set solver
DIFFPROX_ACTIVE_SET_PIVOT_TOL = 1e-11

# Backward pass
DIFFPROX_BACKWARD_REGULARIZATION = 1e-12
DIFFPROX_WEAK_ACTIVITY_TOL = 1e-9
DIFFPROX_BACKWARD_RCOND = 1e-12


# ============================================================
# GEOMETRY / COLLISION
# ============================================================

DIFFPROX_QUATERNION_NORM_TOL = 1e-6
DIFFPROX_SURFACE_POINT_TOL = 1e-10


# ============================================================
# PLANNER DEMO
# ============================================================

DIFFPROX_PLANNER = {
    'N': 60,
    'DT': 0.1,
    'WHEELBASE': 1.0,
    'CAR_LENGTH': 1.0,
    'CAR_RADIUS': 0.3,
    'OBSTACLE_LENGTH': 3.0,
    'OBSTACLE_RADIUS': 0.6,
    'MARGIN': 0.0,
    'GAMMA_MAX': 0.5,
    'U_BOUNDS': [[-4.0, 4.0], [-1.5, 1.5]],
    'GOAL_WEIGHTS': [100.0, 100.0, 10.0, 10.0, 1.0],
    'CONTROL_WEIGHT': 0.1,
    'PENALTY_WEIGHT': 10.0,
    'PENALTY_GROWTH': 10.0,
    'OUTER_ROUNDS': 5,
    'INNER_ITERATIONS': 200,
    'ARMIJO_C': 1e-4,
    'BACKTRACK_FACTOR': 0.5,
    'GOAL_TOLERANCE': 0.1,
    'PHI_TOLERANCE': 1e-4,
}


# ============================================================
# LOGGING
# ============================================================

DIFFPROX_LOG_LEVEL = os.environ.get('DIFFPROX_LOG_LEVEL', 'WARNING')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{levelname} {asctime} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        app: {
            'handlers': ['console'],
            'level': DIFFPROX_LOG_LEVEL,
            'propagate': False,
        }
        for app in ('core', 'geometry', 'qp', 'collision', 'planner')
    },
}
