"""
Utilities Package for Core App
Contains reusable utility modules for:
- Numeric validation
- Report formatting
"""

from .formatting import format_float, to_json_line
from .validators import (
    validate_matrix,
    validate_positive,
    validate_unit_quaternion,
    validate_vector,
)

__all__ = [
    'format_float',
    'to_json_line',
    'validate_matrix',
    'validate_positive',
    'validate_unit_quaternion',
    'validate_vector',
]
