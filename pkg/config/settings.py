"""
Configuración del proyecto (banco de pruebas de aprendizaje en línea para NMT).

Todos los valores por defecto del banco viven aquí y se pueden sobreescribir
con variables de entorno (archivo .env incluido), con un archivo de
configuración key=value (--config) o con flags de la línea de comandos.
"""

from pathlib import Path
import os
from dotenv import load_dotenv

load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get('OLNMT_SECRET_KEY', 'olnmt-workbench-local-only')

DEBUG = os.environ.get('OLNMT_DEBUG', '0') == '1'

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    'apps.autodiff',
    'apps.traduccion',
    'apps.optimizadores',
    'apps.subpalabras',
    'apps.reportes',
    'apps.corpus',
    'apps.simulacion',
    'apps.auditoria',
]

# Django exige una base de datos; el banco no la usa (no hay modelos ORM).
DATABASES = {
    'default': {
        'ENGINE': 'django.db.backends.sqlite3',
        'NAME': BASE_DIR / 'db.sqlite3',
    }
}

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'America/La_Paz'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# --- Logging ---

LOG_LEVEL = os.environ.get('OLNMT_LOG_LEVEL', 'INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'simple': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'simple',
        },
    },
    'loggers': {
        'apps': {
            'handlers': ['console'],
            'level': LOG_LEVEL,
            'propagate': False,
        },
    },
}


# --- Banco de pruebas ---

WORKBENCH_VERSION = '1.0.0'

# Directorio de salida por defecto de todos los comandos
WORKBENCH_OUT_DIR = Path(os.environ.get('OLNMT_OUT_DIR', BASE_DIR / 'runs'))

# Modelo a escala de escritorio (512 sigue siendo configurable)
MODEL_DEFAULTS = {
    'embedding_dim': 64,
    'hidden_dim': 64,
    'attention_dim': 64,
    'deep_output_dim': 64,
    'weight_noise_sigma': 0.01,
    'beam_size': 6,
    'max_output_length': 50,
    'init_scale': 0.08,
    'dtype': 'float32',
}

# Hiperparámetros de los algoritmos (valores de la tabla de hiperparámetros)
OPTIMIZER_DEFAULTS = {
    'sgd': {'lr': 1e-3},
    'adagrad': {'lr': 1e-4, 'eps': 1e-8},
    'adadelta': {'lr': 1e-1, 'decay': 0.95, 'eps': 1e-6},
    'adam': {'lr': 1e-3, 'beta1': 0.9, 'beta2': 0.999, 'eps': 1e-8},
    'pas': {'lr': 1.0, 'C': 1e-2},
    'ppas': {'lr': 1e-2, 'C': 1e-2},
    'none': {'lr': 0.0},
}

OPTIMIZER_COMMON = {
    'k_max': 10,
    'clip_norm': 1.0,
}

# Entrenamiento offline: Adadelta con sus parámetros por defecto
TRAINING_DEFAULTS = {
    'optimizer': 'adadelta',
    'lr': 1.0,
    'eval_every': 1000,
    'patience': 10000,
    'max_updates': 200000,
    'clip_norm': 1.0,
    'dev_beam_size': 1,
}

METRIC_DEFAULTS = {
    'bootstrap_samples': 1000,
}

# Tiempo medio de actualización reportado en GPU; solo de referencia
REFERENCE_UPDATE_TIME_MS = 65.0

# BPE conjunto (fuente + destino) y vocabularios
BPE_DEFAULTS = {
    'num_merges': 8000,
    'min_frequency': 2,
}

CORPUS_DEFAULTS = {
    'vocab_size': 30000,
}
