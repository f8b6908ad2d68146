from django.apps import AppConfig


class MollifiedConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'mollified'
    verbose_name = 'Mollified collocation'
