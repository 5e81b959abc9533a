"""
Django settings for the suave project.

Process-level configuration comes from environment variables, optionally
loaded from a local ``.env`` file. Mission parameters live in the JSON
scenario files under ``scenarios/``.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables from a local .env file if present
env_path = BASE_DIR / ".env"
if env_path.exists():
    load_dotenv(env_path)

# SECURITY WARNING: keep the secret key used in production secret!
SECRET_KEY = os.getenv('DJANGO_SECRET_KEY', 'django-insecure-suave-desk-exemplar-local-only')

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = os.getenv('DJANGO_DEBUG', 'True').lower() == 'true'

ALLOWED_HOSTS = [
    h.strip()
    for h in os.getenv('DJANGO_ALLOWED_HOSTS', '127.0.0.1,localhost,testserver').split(',')
    if h.strip()
]

# Application definition

INSTALLED_APPS = [
    'suaveApp',
]

MIDDLEWARE = [
    'django.middleware.security.SecurityMiddleware',
    'django.middleware.common.CommonMiddleware',
    'django.middleware.csrf.CsrfViewMiddleware',
    'django.middleware.clickjacking.XFrameOptionsMiddleware',
]

ROOT_URLCONF = 'suave.urls'

WSGI_APPLICATION = 'suave.wsgi.application'

# Missions keep no persistent state
DATABASES = {}

# Internationalization
LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = True
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# ================= Exemplar Settings ================= #

SUAVE_OUTPUT_DIR = Path(os.getenv('SUAVE_OUTPUT_DIR', BASE_DIR / 'results'))
SUAVE_WORKERS = int(os.getenv('SUAVE_WORKERS', '1'))
SUAVE_LOG_LEVEL = os.getenv('SUAVE_LOG_LEVEL', 'INFO').upper()
SUAVE_DEFAULT_SCENARIO = Path(
    os.getenv('SUAVE_DEFAULT_SCENARIO', BASE_DIR / 'scenarios' / 'pipeline_inspection.json')
)

# ================= Logging ================= #

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '%(asctime)s %(levelname)s %(name)s %(message)s',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'loggers': {
        'suaveApp': {
            'handlers': ['console'],
            'level': SUAVE_LOG_LEVEL,
            'propagate': False,
        },
    },
}
