from django.apps import AppConfig


class SubpalabrasConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.subpalabras'
