"""
Settings access for library code.

Library functions read their tunables from Django settings when a settings
module is configured (``manage.py`` or the test runner) and fall back to the
documented defaults otherwise, so the numerical code stays importable and
callable as a plain library.
"""

from django.conf import settings
from django.core.exceptions import ImproperlyConfigured


def get_setting(name, default):
    """
    Read a DIFFPROX_* setting

    Args:
        name: Setting name, e.g. 'DIFFPROX_TOL'
        default: Value used when the setting or the settings module is missing

    Returns:
        The configured value or the default
    """
    try:
        return getattr(settings, name, default)
    except ImproperlyConfigured:
        return default


def get_planner_setting(key, default):
    """Read one entry of the DIFFPROX_PLANNER dict."""
    planner = get_setting('DIFFPROX_PLANNER', {}) or {}
    return planner.get(key, default)
