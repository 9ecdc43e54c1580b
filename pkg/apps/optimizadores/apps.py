from django.apps import AppConfig


class OptimizadoresConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.optimizadores'
