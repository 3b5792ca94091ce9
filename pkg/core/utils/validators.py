"""
Validation Utilities for Core App
Contains numeric validation functions:
- Finite vectors and matrices of a given shape
- Strictly positive scalars
- Unit quaternions
"""

import math

import numpy as np
from django.core.exceptions import ValidationError


def validate_vector(value, length, field_name='Vector'):
    """
    Validate a finite real vector

    Args:
        value: Sequence or array of numbers
        length: Required length
        field_name: Field name for error messages

    Returns:
        np.ndarray: Validated float vector (a fresh copy)

    Raises:
        ValidationError: If the value is not a finite vector of that length
    """
    if value is None:
        raise ValidationError(f'{field_name} is required')

    try:
        vector = np.array(value, dtype=float)
    except (ValueError, TypeError):
        raise ValidationError(f'{field_name} must contain only numbers')

    if vector.shape != (length,):
        raise ValidationError(f'{field_name} must have {length} entries, got shape {vector.shape}')

    if not np.all(np.isfinite(vector)):
        raise ValidationError(f'{field_name} must be finite')

    return vector


def validate_matrix(value, shape=None, field_name='Matrix'):
    """
    Validate a finite real matrix

    Args:
        value: Nested sequence or array
        shape: Required shape; None entries are free, e.g. (None, 2)
        field_name: Field name for error messages

    Returns:
        np.ndarray: Validated float matrix (a fresh copy)

    Raises:
        ValidationError: If the value is not a finite matrix of that shape
    """
    if value is None:
        raise ValidationError(f'{field_name} is required')

    try:
        matrix = np.array(value, dtype=float)
    except (ValueError, TypeError):
        raise ValidationError(f'{field_name} must be a rectangular array of numbers')

    if matrix.ndim != 2:
        raise ValidationError(f'{field_name} must be two-dimensional, got shape {matrix.shape}')

    if shape is not None:
        for axis, (actual, expected) in enumerate(zip(matrix.shape, shape)):
            if expected is not None and actual != expected:
                raise ValidationError(
                    f'{field_name} must have {expected} entries along axis {axis}, got shape {matrix.shape}'
                )

    if not np.all(np.isfinite(matrix)):
        raise ValidationError(f'{field_name} must be finite')

    return matrix


def validate_positive(value, field_name='Value'):
    """
    Validate a strictly positive finite scalar

    Raises:
        ValidationError: If the value is missing, not finite or not > 0
    """
    if value is None:
        raise ValidationError(f'{field_name} is required')

    try:
        value = float(value)
    except (ValueError, TypeError):
        raise ValidationError(f'{field_name} must be a number')

    if not math.isfinite(value):
        raise ValidationError(f'{field_name} must be finite')

    if value <= 0.0:
        raise ValidationError(f'{field_name} must be positive, got {value!r}')

    return value


def validate_unit_quaternion(value, tol=1e-9, normalize_tol=None, field_name='Quaternion'):
    """
    Validate a scalar-first unit quaternion

    Args:
        value: Sequence of 4 numbers (w, x, y, z)
        tol: Accepted deviation of the norm from 1
        normalize_tol: If given, quaternions within this deviation are
            renormalized instead of rejected
        field_name: Field name for error messages

    Returns:
        np.ndarray: Unit quaternion

    Raises:
        ValidationError: If the norm is too far from 1
    """
    q = validate_vector(value, 4, field_name)
    norm = float(np.linalg.norm(q))

    if abs(norm - 1.0) <= tol:
        return q

    if normalize_tol is not None and abs(norm - 1.0) <= normalize_tol:
        return q / norm

    raise ValidationError(f'{field_name} must have unit norm, got norm {norm:.6g}')
