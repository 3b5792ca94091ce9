"""
Scene files.

A scene is a JSON object with a ``bodies`` list; each body is validated by
BodyForm. Errors name the body by index, name and source line.
"""

import json
from dataclasses import dataclass
from pathlib import Path

from django.core.exceptions import ValidationError

from .forms import BodyForm


@dataclass(frozen=True)
class SceneBody:
    name: str
    shape: object


def body_line(text, name):
    """1-based line of the first occurrence of the body's name, or None."""
    if not isinstance(name, str):
        return None
    index = text.find(json.dumps(name))
    if index < 0:
        return None
    return text.count('\n', 0, index) + 1


def form_messages(form):
    messages = []
    for field, errors in form.errors.items():
        for message in errors:
            if field == '__all__':
                messages.append(message)
            else:
                messages.append(f'{field}: {message}')
    return messages


def parse_scene(text, source='<scene>'):
    """
    Validate scene JSON text

    Args:
        text: JSON document
        source: Name used in error messages

    Returns:
        list: SceneBody for every body, in file order

    Raises:
        ValidationError: With one message per problem, each prefixed by its
            location
    """
    try:
        document = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f'{source}: line {exc.lineno} column {exc.colno}: {exc.msg}')

    if not isinstance(document, dict) or not isinstance(document.get('bodies'), list):
        raise ValidationError(f'{source}: a scene must be an object with a "bodies" list')

    bodies, errors = [], []
    known_fields = set(BodyForm.base_fields)
    for i, raw in enumerate(document['bodies']):
        if not isinstance(raw, dict):
            errors.append(f'{source}: bodies[{i}]: a body must be an object')
            continue

        name = raw.get('name')
        line = body_line(text, name)
        where = f'{source}' + (f' line {line}' if line else '') + f': bodies[{i}]'
        if isinstance(name, str):
            where += f' {name!r}'

        unknown = sorted(set(raw) - known_fields)
        if unknown:
            errors.append(f'{where}: unknown field(s) {", ".join(unknown)}')
            continue

        form = BodyForm(data=raw)
        if not form.is_valid():
            errors.extend(f'{where}: {message}' for message in form_messages(form))
            continue
        bodies.append(SceneBody(form.cleaned_data['name'], form.cleaned_data['shape']))

    if errors:
        raise ValidationError(errors)
    return bodies


def load_scene(path):
    """Read and validate a scene file."""
    path = Path(path)
    return parse_scene(path.read_text(encoding='utf-8'), source=str(path))


def load_pair(path):
    """
    Read a scene file holding exactly two bodies

    Returns:
        tuple: (SceneBody, SceneBody)
    """
    bodies = load_scene(path)
    if len(bodies) != 2:
        raise ValidationError(f'{path}: pair queries need exactly 2 bodies, found {len(bodies)}')
    return bodies[0], bodies[1]
