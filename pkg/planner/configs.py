"""
Planning configuration files.

A config is a JSON object with ``x0`` and ``goal`` car states, an optional
``obstacles`` list of capsule bodies and an optional ``planner`` object of
overrides. Missing optimizer settings come from DIFFPROX_PLANNER.
"""

import json
from pathlib import Path

from django.core.exceptions import ValidationError

from collision.scenes import form_messages

from .forms import PlanConfigForm
from .trajectory import PlanProblem


def parse_plan_config(text, source='<config>'):
    """
    Validate config JSON text and build the planning problem

    Raises:
        ValidationError: With messages prefixed by the source name
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f'{source}: line {exc.lineno} column {exc.colno}: {exc.msg}')

    if not isinstance(document, dict):
        raise ValidationError(f'{source}: a config must be a JSON object')
    unknown = sorted(set(document) - set(PlanConfigForm.base_fields))
    if unknown:
        raise ValidationError(f'{source}: unknown field(s) {", ".join(unknown)}')

    form = PlanConfigForm(data=document)
    if not form.is_valid():
        raise ValidationError([f'{source}: {message}' for message in form_messages(form)])

    cleaned = form.cleaned_data
    try:
        return PlanProblem.from_settings(
            cleaned['x0'], cleaned['goal'], cleaned['obstacles'], **cleaned['planner']
        )
    except ValidationError as exc:
        raise ValidationError([f'{source}: {message}' for message in exc.messages])


def load_plan_config(path):
    """Read and validate a planning config file."""
    path = Path(path)
    return parse_plan_config(path.read_text(encoding='utf-8'), source=str(path))
