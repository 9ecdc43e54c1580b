"""
Configuración efectiva de una ejecución.

Precedencia: valores por defecto (settings) < archivo --config (key=value,
leído con python-dotenv) < flags de la línea de comandos. Las claves del
archivo son los nombres largos de los flags con '-' cambiado por '_'.
"""

import json
from dataclasses import asdict, dataclass, field
from pathlib import Path

from django.conf import settings
from dotenv import dotenv_values

from .exceptions import ConfigurationError

RUN_CONFIG_NAME = 'run_config.json'

MODEL_KEYS = ('embedding_dim', 'hidden_dim', 'attention_dim', 'deep_output_dim',
              'weight_noise_sigma', 'beam_size', 'max_output_length', 'dtype')
OPTIMIZER_KEYS = ('optimizer', 'lr', 'C', 'k_max', 'clip_norm', 'ppas_true_projection')
TRUE_VALUES = ('1', 'true', 'yes', 'on')
FALSE_VALUES = ('0', 'false', 'no', 'off', '')


def _bool(value):
    if isinstance(value, bool):
        return value
    text = str(value).strip().lower()
    if text in TRUE_VALUES:
        return True
    if text in FALSE_VALUES:
        return False
    raise ValueError(f"valor booleano inválido: {value!r}")


def _list(value):
    if isinstance(value, (list, tuple)):
        return list(value)
    return [item for item in str(value).replace(',', ' ').split() if item]


CASTERS = {'bool': _bool, 'int': int, 'float': float, 'str': str, 'list': _list}


def load_config_file(path):
    """Archivo plano key=value → {clave: texto}."""
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"archivo de configuración inexistente: {path}")
    values = dotenv_values(path)
    return {key.strip().replace('-', '_'): value for key, value in values.items()}


def coerce(key, value, kind):
    if value is None:
        return None
    try:
        return CASTERS[kind](value)
    except (TypeError, ValueError):
        raise ConfigurationError(f"{key}: se esperaba {kind}, se recibió {value!r}")


def resolve_options(schema, flags, config_path=None):
    """
    `schema` es {clave: (tipo, valor por defecto)}; `flags` son las opciones de
    argparse (None = no indicado). Devuelve el diccionario resuelto.
    """
    resolved = {key: default for key, (_, default) in schema.items()}
    if config_path:
        for key, value in load_config_file(config_path).items():
            if key not in schema:
                raise ConfigurationError(f"{config_path}: clave desconocida {key!r}")
            resolved[key] = coerce(key, value, schema[key][0])
    for key in schema:
        value = flags.get(key)
        if value is not None:
            resolved[key] = coerce(key, value, schema[key][0])
    return resolved


@dataclass
class RunConfig:
    command: str
    out_dir: str
    seed: int = 0
    paths: dict = field(default_factory=dict)
    model: dict = field(default_factory=dict)
    optimizer: dict = field(default_factory=dict)
    options: dict = field(default_factory=dict)

    @classmethod
    def from_options(cls, command, resolved, path_keys=()):
        """Reparte las opciones resueltas en rutas, modelo, optimizador y el resto."""
        groups = {'paths': {}, 'model': {}, 'optimizer': {}, 'options': {}}
        for key, value in resolved.items():
            if key in ('out_dir', 'seed', 'config'):
                continue
            if key in path_keys:
                group = 'paths'
            elif key in MODEL_KEYS:
                group = 'model'
            elif key in OPTIMIZER_KEYS:
                group = 'optimizer'
            else:
                group = 'options'
            groups[group][key] = str(value) if isinstance(value, Path) else value
        return cls(command=command, out_dir=str(resolved['out_dir']), seed=resolved.get('seed') or 0, **groups)

    def to_dict(self):
        return dict(asdict(self), version=settings.WORKBENCH_VERSION)

    def write(self, directory=None):
        directory = Path(directory or self.out_dir)
        directory.mkdir(parents=True, exist_ok=True)
        path = directory / RUN_CONFIG_NAME
        path.write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True, ensure_ascii=False) + "\n",
                        encoding='utf-8')
        return path
