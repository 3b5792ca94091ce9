import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'diffprox.settings')
django.setup()
