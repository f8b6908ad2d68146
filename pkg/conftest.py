"""Pytest wiring for the Django test suite under app/.

Mirrors what ``manage.py test`` does: configure settings, set up the
test environment and create a throwaway test database for the session.
"""

import os
import sys
from pathlib import Path

import pytest

APP_DIR = Path(__file__).resolve().parent / 'app'
if str(APP_DIR) not in sys.path:
    sys.path.insert(0, str(APP_DIR))

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'collocation_site.settings')

import django  # noqa: E402

django.setup()


@pytest.fixture(scope='session', autouse=True)
def _django_test_environment():
    from django.test.utils import (
        setup_databases,
        setup_test_environment,
        teardown_databases,
        teardown_test_environment,
    )

    setup_test_environment()
    old_config = setup_databases(verbosity=0, interactive=False)
    yield
    teardown_databases(old_config, verbosity=0)
    teardown_test_environment()
