import logging

from collision.gradcheck import check_gradients
from collision.scenes import load_pair
from core.management.base import DiffProxCommand

logger = logging.getLogger(__name__)


class Command(DiffProxCommand):
    help = 'Compare analytic proximity Jacobians against central finite differences'

    def add_arguments(self, parser):
        parser.add_argument('scene', help='Path to a scene JSON file with two bodies')
        parser.add_argument(
            '--step',
            type=float,
            default=1e-6,
            help='Finite-difference step (default 1e-6)',
        )

    def run(self, **options):
        body1, body2 = load_pair(options['scene'])
        check = check_gradients(body1.shape, body2.shape, step=options['step'])

        # A diagnostic, not a gate: a failed check still exits 0
        if not check.passed:
            message = (
                f'Gradient check failed at step {options["step"]:g}: '
                f'max relative error {check.max_rel_error:.3e}'
            )
            logger.warning(message)
            self.stderr.write(self.style.WARNING(message))

        return {
            'bodies': [body1.name, body2.name],
            'step': options['step'],
            'passed': check.passed,
            'max_abs_error': check.max_abs_error,
            'max_rel_error': check.max_rel_error,
            'coordinates': check.coordinates(),
        }
