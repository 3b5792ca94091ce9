"""
Form Definitions for Planner App
Contains Django forms for:
- Car states
- Planning configurations (start, goal, obstacles and optimizer overrides)
"""

from django import forms

from collision.forms import BodyForm
from collision.scenes import form_messages
from core.conf import get_planner_setting
from core.constants import SHAPE_KINDS

from .dynamics import CarState

STATE_FIELDS = ('px', 'py', 'psi', 'v', 'gamma')

# PlanProblem fields a config may override under "planner"
PLANNER_OVERRIDES = (
    'N', 'dt', 'wheelbase', 'car_length', 'car_radius', 'margin', 'gamma_max',
    'u_bounds', 'goal_weights', 'control_weight', 'penalty_weight', 'penalty_growth',
    'outer_rounds', 'inner_iterations', 'armijo_c', 'backtrack_factor',
    'goal_tolerance', 'phi_tolerance',
)


class CarStateForm(forms.Form):
    """Car state given as an object with px, py, psi, v, gamma"""

    px = forms.FloatField()
    py = forms.FloatField()
    psi = forms.FloatField(required=False)
    v = forms.FloatField(required=False)
    gamma = forms.FloatField(required=False)

    def clean(self):
        cleaned_data = super().clean()
        if self.errors:
            return cleaned_data
        values = [cleaned_data.get(name) or 0.0 for name in STATE_FIELDS]
        cleaned_data['state'] = CarState(*values)
        return cleaned_data


def clean_car_state(value, label):
    if not isinstance(value, dict):
        raise forms.ValidationError(f'{label} must be an object with keys {", ".join(STATE_FIELDS)}')
    unknown = sorted(set(value) - set(STATE_FIELDS))
    if unknown:
        raise forms.ValidationError(f'{label}: unknown field(s) {", ".join(unknown)}')
    form = CarStateForm(data=value)
    if not form.is_valid():
        raise forms.ValidationError([f'{label}: {message}' for message in form_messages(form)])
    return form.cleaned_data['state']


class PlanConfigForm(forms.Form):
    """
    A planning configuration file

    ``obstacles`` is a list of scene bodies, all capsules; L and R default
    to the planner's obstacle size. ``planner`` overrides entries of the
    DIFFPROX_PLANNER defaults.
    """

    x0 = forms.JSONField()
    goal = forms.JSONField()
    obstacles = forms.JSONField(required=False)
    planner = forms.JSONField(required=False)

    def clean_x0(self):
        return clean_car_state(self.cleaned_data.get('x0'), 'x0')

    def clean_goal(self):
        return clean_car_state(self.cleaned_data.get('goal'), 'goal')

    def clean_obstacles(self):
        """Every obstacle must be a valid capsule body"""
        obstacles = self.cleaned_data.get('obstacles')
        if obstacles is None:
            return []
        if not isinstance(obstacles, list):
            raise forms.ValidationError('obstacles must be a list of bodies')

        shapes, errors = [], []
        for i, raw in enumerate(obstacles):
            if not isinstance(raw, dict):
                errors.append(f'obstacles[{i}]: an obstacle must be an object')
                continue
            where = f'obstacles[{i}]'
            if isinstance(raw.get('name'), str):
                where += f' {raw["name"]!r}'
            if raw.get('kind') != SHAPE_KINDS['CAPSULE']:
                errors.append(f'{where}: obstacles must be capsules')
                continue
            raw = {
                'L': get_planner_setting('OBSTACLE_LENGTH', 3.0),
                'R': get_planner_setting('OBSTACLE_RADIUS', 0.6),
                **raw,
            }
            form = BodyForm(data=raw)
            if not form.is_valid():
                errors.extend(f'{where}: {message}' for message in form_messages(form))
                continue
            shapes.append(form.cleaned_data['shape'])

        if errors:
            raise forms.ValidationError(errors)
        return shapes

    def clean_planner(self):
        overrides = self.cleaned_data.get('planner')
        if overrides is None:
            return {}
        if not isinstance(overrides, dict):
            raise forms.ValidationError('planner must be an object')
        unknown = sorted(set(overrides) - set(PLANNER_OVERRIDES))
        if unknown:
            raise forms.ValidationError(f'planner: unknown setting(s) {", ".join(unknown)}')

        cleaned = {}
        for key, value in overrides.items():
            if key in ('u_bounds', 'goal_weights'):
                if not isinstance(value, list):
                    raise forms.ValidationError(f'planner.{key} must be a list')
                value = tuple(tuple(row) if isinstance(row, list) else row for row in value)
            elif isinstance(value, bool) or not isinstance(value, (int, float)):
                raise forms.ValidationError(f'planner.{key} must be a number')
            cleaned[key] = value
        return cleaned
