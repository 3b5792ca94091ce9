from django.apps import AppConfig


class CollisionConfig(AppConfig):
    """Configuration class for Collision app"""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'collision'
    verbose_name = 'Collision Detection'
