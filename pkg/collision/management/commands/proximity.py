from collision.detection import proximity
from collision.scenes import load_pair
from core.management.base import DiffProxCommand


def solver_report(sol):
    return {
        'name': sol.solver,
        'iterations': sol.iterations,
        'kkt_residual': sol.kkt_residual,
    }


class Command(DiffProxCommand):
    help = 'Proximity value and closest points of the two bodies in a scene file'

    def add_arguments(self, parser):
        parser.add_argument('scene', help='Path to a scene JSON file with two bodies')

    def run(self, **options):
        body1, body2 = load_pair(options['scene'])
        result = proximity(body1.shape, body2.shape)

        report = {
            'bodies': [body1.name, body2.name],
            'pair_kind': result.pair_kind,
            'phi': result.phi,
            'collision': result.collision,
            'p1': result.p1,
            'p2': result.p2,
        }
        if result.p1_surf is not None:
            report['p1_surf'] = result.p1_surf
            report['p2_surf'] = result.p2_surf
        report['solver'] = solver_report(result.qp)
        return report
