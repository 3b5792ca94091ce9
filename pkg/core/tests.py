"""
Test Suite for Core App
Contains unit tests for:
- Numeric validators
- Report formatting
- Settings access
- Error mapping of the management command base
"""

import json
import math
from io import StringIO

import numpy as np
from django.core.exceptions import ValidationError
from django.core.management.base import CommandError
from django.test import SimpleTestCase, override_settings

from .conf import get_planner_setting, get_setting
from .constants import EXIT_CODES
from .exceptions import (
    FactorizationError,
    InvalidStateError,
    NondifferentiablePointError,
    PlanningFailureError,
)
from .management.base import DiffProxCommand, describe_error
from .utils.formatting import format_float, to_json_line
from .utils.validators import (
    validate_matrix,
    validate_positive,
    validate_unit_quaternion,
    validate_vector,
)


class ValidatorTest(SimpleTestCase):
    """Test cases for the numeric validators"""

    def test_vector(self):
        """Test length and finiteness checks"""
        np.testing.assert_array_equal(validate_vector([1, 2, 3], 3), [1.0, 2.0, 3.0])
        for value in ([1, 2], [1, 2, math.inf], ['a', 2, 3], None):
            with self.assertRaises(ValidationError):
                validate_vector(value, 3)

    def test_vector_error_names_field(self):
        """Test messages carry the field name"""
        with self.assertRaises(ValidationError) as context:
            validate_vector([1, 2], 3, 'r')
        self.assertIn('r must have 3 entries', context.exception.messages[0])

    def test_matrix(self):
        """Test free and fixed axes"""
        self.assertEqual(validate_matrix([[1, 2], [3, 4], [5, 6]], (None, 2)).shape, (3, 2))
        with self.assertRaises(ValidationError):
            validate_matrix([[1, 2, 3]], (None, 2))
        with self.assertRaises(ValidationError):
            validate_matrix([1, 2])
        with self.assertRaises(ValidationError):
            validate_matrix([[1, 2], [3]])

    def test_positive(self):
        """Test zero, negative and non-finite values are rejected"""
        self.assertEqual(validate_positive('2.5'), 2.5)
        for value in (0, -1.0, math.nan, 'x', None):
            with self.assertRaises(ValidationError):
                validate_positive(value)

    def test_unit_quaternion(self):
        """Test tolerance and renormalization"""
        np.testing.assert_array_equal(validate_unit_quaternion([1, 0, 0, 0]), [1, 0, 0, 0])
        q = validate_unit_quaternion([0, 2e-7 + 1.0, 0, 0], normalize_tol=1e-6)
        self.assertAlmostEqual(np.linalg.norm(q), 1.0, places=15)
        with self.assertRaises(ValidationError):
            validate_unit_quaternion([0, 2e-7 + 1.0, 0, 0])
        with self.assertRaises(ValidationError):
            validate_unit_quaternion([0.9, 0, 0, 0], normalize_tol=1e-6)


class FormattingTest(SimpleTestCase):
    """Test cases for report formatting"""

    def test_seventeen_digits(self):
        """Test floats round-trip through their text"""
        self.assertEqual(format_float(0.1), '0.10000000000000001')
        self.assertEqual(float(format_float(1 / 3)), 1 / 3)

    def test_integral_floats_keep_a_point(self):
        """Test integral floats are written as floats"""
        self.assertEqual(format_float(8.75), '8.75')
        self.assertEqual(format_float(3.0), '3.0')
        self.assertEqual(format_float(-0.0), '0.0')

    def test_non_finite(self):
        """Test inf and nan become null"""
        self.assertEqual(format_float(math.inf), 'null')
        self.assertEqual(format_float(math.nan), 'null')

    def test_json_line(self):
        """Test nested reports serialize to one parseable line"""
        line = to_json_line({
            'phi': 3.96,
            'collision': np.bool_(False),
            'p1': np.array([0.0, 1.5, -2.0]),
            'solver': {'iterations': np.int64(7), 'name': 'pdip'},
            'missing': None,
        })
        self.assertNotIn('\n', line)
        report = json.loads(line)
        self.assertEqual(report['p1'], [0.0, 1.5, -2.0])
        self.assertIs(report['collision'], False)
        self.assertEqual(report['solver']['iterations'], 7)
        self.assertIsNone(report['missing'])

    def test_deterministic(self):
        """Test identical reports give identical bytes"""
        report = {'x': [0.1, 0.2], 'y': 1e-300}
        self.assertEqual(to_json_line(report), to_json_line(dict(report)))


class SettingsTest(SimpleTestCase):
    """Test cases for settings access"""

    @override_settings(DIFFPROX_TOL=1e-8)
    def test_configured_value(self):
        """Test configured settings win over defaults"""
        self.assertEqual(get_setting('DIFFPROX_TOL', 1e-10), 1e-8)

    def test_default(self):
        """Test unknown settings fall back to the default"""
        self.assertEqual(get_setting('DIFFPROX_NOT_A_SETTING', 42), 42)

    @override_settings(DIFFPROX_PLANNER={'N': 12})
    def test_planner_entries(self):
        """Test planner entries and their defaults"""
        self.assertEqual(get_planner_setting('N', 60), 12)
        self.assertEqual(get_planner_setting('DT', 0.1), 0.1)


class RaisingCommand(DiffProxCommand):
    def __init__(self, error=None, report=None):
        super().__init__(stdout=StringIO(), stderr=StringIO())
        self.error = error
        self.report = report

    def run(self, **options):
        if self.error is not None:
            raise self.error
        return self.report


class CommandBaseTest(SimpleTestCase):
    """Test cases for DiffProxCommand error mapping"""

    def returncode(self, error):
        with self.assertRaises(CommandError) as context:
            RaisingCommand(error).handle()
        return context.exception.returncode

    def test_exit_codes(self):
        """Test each error category maps to its exit code"""
        self.assertEqual(self.returncode(ValidationError('bad')), EXIT_CODES['INVALID_INPUT'])
        self.assertEqual(self.returncode(FileNotFoundError('gone')), EXIT_CODES['INVALID_INPUT'])
        self.assertEqual(self.returncode(FactorizationError(1)), EXIT_CODES['NONDIFFERENTIABLE'])
        self.assertEqual(
            self.returncode(NondifferentiablePointError('weak', index=2)),
            EXIT_CODES['NONDIFFERENTIABLE'],
        )
        self.assertEqual(self.returncode(PlanningFailureError('stuck')), EXIT_CODES['PLANNING_FAILURE'])
        self.assertEqual(self.returncode(InvalidStateError('gamma')), EXIT_CODES['PLANNING_FAILURE'])

    def test_unexpected_errors_propagate(self):
        """Test programming errors are not turned into exit codes"""
        with self.assertRaises(KeyError):
            RaisingCommand(KeyError('x')).handle()

    def test_report_written(self):
        """Test the report is written as one JSON line"""
        command = RaisingCommand(report={'phi': 1.0})
        command.handle()
        self.assertEqual(json.loads(command.stdout.getvalue()), {'phi': 1.0})

    def test_describe_error(self):
        """Test messages of validation and nondifferentiable errors"""
        self.assertEqual(describe_error(ValidationError(['a', 'b'])), 'a; b')
        message = describe_error(NondifferentiablePointError('weak', index=3))
        self.assertEqual(message, 'Nondifferentiable point (constraint 3): weak')
