"""
Report Formatting Utilities
Line-delimited JSON reports with a fixed float format so that identical
inputs produce byte-identical output.
"""

import json
import math

import numpy as np

FLOAT_FORMAT = '.17g'


def format_float(value):
    """
    Format a float with 17 significant digits as a JSON number

    Non-finite values have no JSON spelling and are written as null.
    """
    value = float(value)
    if not math.isfinite(value):
        return 'null'
    text = format(value, FLOAT_FORMAT)
    if text in ('0', '-0'):
        return '0.0'
    if not any(ch in text for ch in '.en'):
        text += '.0'
    return text


def _encode(value):
    if value is None or isinstance(value, (bool, np.bool_)):
        return json.dumps(bool(value) if value is not None else None)
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format_float(value)
    if isinstance(value, np.ndarray):
        return _encode(value.tolist())
    if isinstance(value, dict):
        items = (f'{json.dumps(str(key))}: {_encode(item)}' for key, item in value.items())
        return '{' + ', '.join(items) + '}'
    if isinstance(value, (list, tuple)):
        return '[' + ', '.join(_encode(item) for item in value) + ']'
    return json.dumps(str(value))


def to_json_line(report):
    """
    Serialize a report dict as one line of JSON

    Args:
        report: dict of str -> numbers, strings, booleans, lists, arrays

    Returns:
        str: JSON text without a trailing newline
    """
    return _encode(report)
