from django.apps import AppConfig


class TraduccionConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'apps.traduccion'
