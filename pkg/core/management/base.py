"""
Base class for the diffprox management commands.

Subclasses implement ``run(**options)`` and return a report dict, which is
written to stdout as one JSON line. Failures are turned into CommandError
with the exit code of their category.
"""

import logging

from django.core.exceptions import ValidationError
from django.core.management.base import BaseCommand, CommandError

from core.constants import EXIT_CODES
from core.exceptions import (
    DegenerateProblemError,
    FactorizationError,
    InvalidStateError,
    NonConvergenceError,
    NondifferentiablePointError,
    PlanningFailureError,
)
from core.utils.formatting import to_json_line

logger = logging.getLogger(__name__)

# Order matters: the first matching class decides the exit code
ERROR_CODES = (
    (ValidationError, EXIT_CODES['INVALID_INPUT']),
    (OSError, EXIT_CODES['INVALID_INPUT']),
    (NondifferentiablePointError, EXIT_CODES['NONDIFFERENTIABLE']),
    (DegenerateProblemError, EXIT_CODES['NONDIFFERENTIABLE']),
    (NonConvergenceError, EXIT_CODES['NONDIFFERENTIABLE']),
    (FactorizationError, EXIT_CODES['NONDIFFERENTIABLE']),
    (PlanningFailureError, EXIT_CODES['PLANNING_FAILURE']),
    (InvalidStateError, EXIT_CODES['PLANNING_FAILURE']),
)


def describe_error(exc):
    """Human-readable message of an exception, flattening ValidationError."""
    if isinstance(exc, ValidationError):
        return '; '.join(exc.messages)
    if isinstance(exc, NondifferentiablePointError):
        where = f' (constraint {exc.index})' if exc.index is not None else ''
        return f'Nondifferentiable point{where}: {exc}'
    return str(exc)


class DiffProxCommand(BaseCommand):
    """Writes the report of run() as a JSON line and maps errors to exit codes."""

    def run(self, **options):
        raise NotImplementedError('subclasses of DiffProxCommand must provide a run() method')

    def handle(self, *args, **options):
        try:
            report = self.run(**options)
        except CommandError:
            raise
        except Exception as exc:
            for error_class, code in ERROR_CODES:
                if isinstance(exc, error_class):
                    logger.debug('%s failed', self.__class__.__module__, exc_info=True)
                    raise CommandError(describe_error(exc), returncode=code) from exc
            raise

        if report is not None:
            self.stdout.write(to_json_line(report))
