from django.apps import AppConfig


class QpConfig(AppConfig):
    """Configuration class for QP app"""

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'qp'
    verbose_name = 'Quadratic Programs'
