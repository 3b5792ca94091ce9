from django.apps import AppConfig


class GeometryConfig(AppConfig):
    """Configuration class for Geometry app"""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'geometry'
    verbose_name = 'Shapes and Poses'
