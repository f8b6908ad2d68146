"""
WSGI entry point of the collocation site; gunicorn serves
`collocation_site.wsgi:application` (see docker-entrypoint.sh).
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'collocation_site.settings')

application = get_wsgi_application()
