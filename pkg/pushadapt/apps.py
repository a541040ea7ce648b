from django.apps import AppConfig


class PushadaptConfig(AppConfig):
    name = 'pushadapt'
    default_auto_field = 'django.db.models.BigAutoField'
    verbose_name = 'Прогноз толчков'
