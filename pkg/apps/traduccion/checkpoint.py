"""
Contenedor de checkpoints autodescriptivo (.npz de numpy).

Cabecera JSON con la versión del formato, la ModelConfig, los vocabularios y
la tabla BPE; cada parámetro se guarda con su nombre y forma como arreglo
float32 little-endian.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from apps.corpus.vocabulary import VocabularyMap
from apps.subpalabras.bpe import MergeTable
from config.exceptions import CheckpointError
from .configuracion import ModelConfig
from .parameters import ParameterSet

logger = logging.getLogger(__name__)

FORMAT_VERSION = 1
HEADER_KEY = '__header__'
PARAM_PREFIX = 'param:'


@dataclass
class Checkpoint:
    config: ModelConfig
    params: ParameterSet
    src_vocab: VocabularyMap = None
    tgt_vocab: VocabularyMap = None
    merges: MergeTable = None
    meta: dict = field(default_factory=dict)

    def save(self, path):
        header = {
            'format_version': FORMAT_VERSION,
            'config': self.config.to_dict(),
            'parameters': [[name, list(shape)] for name, shape in self.params.shapes().items()],
            'src_vocab': list(self.src_vocab.symbols) if self.src_vocab else None,
            'tgt_vocab': list(self.tgt_vocab.symbols) if self.tgt_vocab else None,
            'merges': [list(pair) for pair in self.merges.merges] if self.merges else None,
            'merges_fingerprint': self.merges.fingerprint if self.merges else None,
            'meta': self.meta,
        }
        arrays = {PARAM_PREFIX + name: t.values.astype('<f4') for name, t in self.params.items()}
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, 'wb') as fh:
            np.savez(fh, **{HEADER_KEY: np.array(json.dumps(header))}, **arrays)
        logger.info("checkpoint guardado en %s (%d parámetros)", path, self.params.size)

    @classmethod
    def load(cls, path):
        try:
            data = np.load(path, allow_pickle=False)
        except (OSError, ValueError) as exc:
            raise CheckpointError(f"no se pudo leer el checkpoint {path}: {exc}")
        with data:
            if HEADER_KEY not in data.files:
                raise CheckpointError(f"{path}: falta la cabecera del checkpoint")
            header = json.loads(str(data[HEADER_KEY]))
            version = header.get('format_version')
            if version != FORMAT_VERSION:
                raise CheckpointError(
                    f"{path}: versión de formato {version} no soportada (se esperaba {FORMAT_VERSION})"
                )
            config = ModelConfig.from_dict(header['config'])
            expected = config.parameter_shapes()
            stored = {key[len(PARAM_PREFIX):]: key for key in data.files if key.startswith(PARAM_PREFIX)}

            missing = [name for name in expected if name not in stored]
            extra = [name for name in stored if name not in expected]
            if missing or extra:
                raise CheckpointError(
                    f"{path}: parámetros faltantes {missing} / inesperados {extra} para la configuración"
                )
            arrays = {}
            for name, shape in expected.items():
                values = data[stored[name]]
                if tuple(values.shape) != tuple(shape):
                    raise CheckpointError(
                        f"{path}: parámetro '{name}' tiene forma {tuple(values.shape)}, "
                        f"la configuración espera {tuple(shape)}"
                    )
                arrays[name] = values

        merges = None
        if header.get('merges') is not None:
            merges = MergeTable(header['merges'], header.get('merges_fingerprint') or '')
        return cls(
            config=config,
            params=ParameterSet(arrays, dtype=config.dtype),
            src_vocab=VocabularyMap(header['src_vocab']) if header.get('src_vocab') else None,
            tgt_vocab=VocabularyMap(header['tgt_vocab']) if header.get('tgt_vocab') else None,
            merges=merges,
            meta=header.get('meta') or {},
        )
