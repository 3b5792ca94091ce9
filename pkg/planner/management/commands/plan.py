import csv
import logging
from pathlib import Path

from core.exceptions import PlanningFailureError
from core.management.base import DiffProxCommand
from core.utils.formatting import format_float, to_json_line
from planner.configs import load_plan_config
from planner.trajectory import plan

logger = logging.getLogger(__name__)

CSV_COLUMNS = ('k', 't', 'px', 'py', 'psi', 'v', 'gamma', 'u1', 'u2', 'phi')


def _cell(value):
    text = format_float(value)
    if text == 'null':
        return 'inf' if value > 0 else ('-inf' if value < 0 else 'nan')
    return text


def write_trajectory_csv(trajectory, dt, path):
    """One row per knot; u1 and u2 are blank on the last knot."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    steps = trajectory.controls.shape[0]
    with path.open('w', newline='', encoding='utf-8') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(CSV_COLUMNS)
        for k, x in enumerate(trajectory.states):
            controls = trajectory.controls[k] if k < steps else (None, None)
            row = [str(k), _cell(k * dt), *(_cell(value) for value in x)]
            row += ['' if u is None else _cell(u) for u in controls]
            row.append(_cell(trajectory.phis[k]))
            writer.writerow(row)


def planner_metadata(problem):
    return {
        'N': problem.N,
        'dt': problem.dt,
        'wheelbase': problem.wheelbase,
        'car_length': problem.car_length,
        'car_radius': problem.car_radius,
        'obstacles': len(problem.obstacles),
        'margin': problem.margin,
        'gamma_max': problem.gamma_max,
        'u_bounds': problem.u_bounds,
        'goal_weights': problem.goal_weights,
        'control_weight': problem.control_weight,
        'penalty_weight': problem.penalty_weight,
        'penalty_growth': problem.penalty_growth,
        'outer_rounds': problem.outer_rounds,
        'inner_iterations': problem.inner_iterations,
        'goal_tolerance': problem.goal_tolerance,
        'phi_tolerance': problem.phi_tolerance,
    }


def summary_report(status, trajectory, problem, out):
    history = trajectory.objective_history
    return {
        'status': status,
        'min_phi': trajectory.min_phi,
        'goal_error': trajectory.goal_error,
        'iterations': trajectory.iterations,
        'rounds': trajectory.rounds,
        'penalty_weight': trajectory.penalty_weight,
        'objective': history[-1][-1] if history else None,
        'out': str(out),
        'planner': planner_metadata(problem),
    }


class Command(DiffProxCommand):
    help = 'Plan a collision-free car trajectory and write it as CSV'

    def add_arguments(self, parser):
        parser.add_argument('config', help='Path to a planning config JSON file')
        parser.add_argument(
            '--out',
            default='traj.csv',
            help='CSV file for the trajectory (default traj.csv)',
        )

    def run(self, **options):
        problem = load_plan_config(options['config'])
        out = options['out']

        try:
            trajectory = plan(problem)
        except PlanningFailureError as exc:
            if exc.trajectory is not None:
                write_trajectory_csv(exc.trajectory, problem.dt, out)
                self.stdout.write(to_json_line(summary_report('failed', exc.trajectory, problem, out)))
            raise

        write_trajectory_csv(trajectory, problem.dt, out)
        logger.info('Wrote %d knots to %s', trajectory.states.shape[0], out)
        return summary_report('ok', trajectory, problem, out)
