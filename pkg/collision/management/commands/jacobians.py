import numpy as np

from collision.detection import proximity
from collision.scenes import load_pair
from core.management.base import DiffProxCommand


class Command(DiffProxCommand):
    help = 'Pose Jacobians of the proximity value of the two bodies in a scene file'

    def add_arguments(self, parser):
        parser.add_argument('scene', help='Path to a scene JSON file with two bodies')

    def run(self, **options):
        body1, body2 = load_pair(options['scene'])
        result = proximity(body1.shape, body2.shape)
        jacobians = result.jacobians()

        return {
            'bodies': [body1.name, body2.name],
            'pair_kind': result.pair_kind,
            'phi': result.phi,
            'dphi_dr1': jacobians.dphi_dr1,
            'dphi_dq1': jacobians.dphi_dq1,
            'dphi_dr2': jacobians.dphi_dr2,
            'dphi_dq2': jacobians.dphi_dq2,
            'translation_residual': float(np.max(np.abs(jacobians.dphi_dr1 + jacobians.dphi_dr2))),
        }
