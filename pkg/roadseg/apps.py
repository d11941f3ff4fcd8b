from django.apps import AppConfig

class RoadsegConfig(AppConfig):

    default_auto_field = 'django.db.models.BigAutoField'
    name = 'roadseg'
    verbose_name = 'Road segmentation'
