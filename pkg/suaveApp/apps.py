from django.apps import AppConfig


class SuaveAppConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'suaveApp'
    verbose_name = 'SUAVE self-adaptive AUV exemplar'
