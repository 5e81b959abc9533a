import os

import django

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "suave.settings")
django.setup()
