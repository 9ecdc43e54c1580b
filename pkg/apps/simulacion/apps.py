from django.apps import AppConfig


class SimulacionConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.simulacion'
