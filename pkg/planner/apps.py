from django.apps import AppConfig


class PlannerConfig(AppConfig):
    """Configuration class for Planner app"""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'planner'
    verbose_name = 'Trajectory Planner'
