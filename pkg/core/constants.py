"""
Constants shared by the diffprox apps
Shape kinds, pair kinds and command exit codes.
"""

# Shape kinds as spelled in scene files
SHAPE_KINDS = {
    'CAPSULE': 'capsule',
    'PADDED_POLYGON': 'padded_polygon',
}

SHAPE_KIND_CHOICES = [
    (SHAPE_KINDS['CAPSULE'], 'Capsule'),
    (SHAPE_KINDS['PADDED_POLYGON'], 'Padded polygon'),
]

# Command exit codes
EXIT_CODES = {
    'SUCCESS': 0,
    'INVALID_INPUT': 2,
    'NONDIFFERENTIABLE': 3,
    'PLANNING_FAILURE': 4,
}
