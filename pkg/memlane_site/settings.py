import os
from pathlib import Path
import environ

BASE_DIR = Path(__file__).resolve().parent.parent

# Env stuff
env = environ.Env(
    DEBUG=(bool, False),
    MEMLANE_THREADS=(int, 1),
    MEMLANE_LOG_LEVEL=(str, "INFO"),
)
environ.Env.read_env(BASE_DIR / ".env")

DEBUG = env("DEBUG")
SECRET_KEY = env("SECRET_KEY", default="memlane-dev-key")
ALLOWED_HOSTS: list = []

DATABASES = {"default": env.db("DATABASE_URL", default=f"sqlite:///{BASE_DIR / 'db.sqlite3'}")}

# Inner numeric kernels must see the thread count before numpy loads them
MEMLANE_THREADS = env("MEMLANE_THREADS")

for variable in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):

    os.environ.setdefault(variable, str(MEMLANE_THREADS))

MEMLANE_ARCH = {
    "input_size": env.int("MEMLANE_ARCH_INPUT_SIZE", default=64),
    "feature_channels": env.int("MEMLANE_ARCH_FEATURE_CHANNELS", default=32),
    "memory_channels": env.int("MEMLANE_ARCH_MEMORY_CHANNELS", default=16),
    "downsample_factor": env.int("MEMLANE_ARCH_DOWNSAMPLE", default=8),
}

MEMLANE_RECORD_RUNS = env.bool("MEMLANE_RECORD_RUNS", default=True)

# Application definition
INSTALLED_APPS = [
    "roadseg"
]

LANGUAGE_CODE = "en-us"
TIME_ZONE = "UTC"
USE_I18N = False
USE_TZ = True
DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "plain": {"format": "{asctime} {levelname} {name}: {message}", "style": "{"},
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "plain"},
    },
    "loggers": {
        "roadseg": {
            "handlers": ["console"],
            "level": env("MEMLANE_LOG_LEVEL"),
            "propagate": False,
        },
    },
}
