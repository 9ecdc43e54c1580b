"""
Tareas de juguete que reemplazan a los corpus reales a escala de escritorio.

- copy: destino = fuente
- reverse: destino = fuente invertida
- substitution-grammar: cada palabra fuente se traduce por una tabla de
  sustitución y algunas palabras (las "modificadoras") intercambian su lugar
  con la siguiente. El desplazamiento de dominio reasigna una fracción de la
  tabla para el dominio propio, imitando ediciones de otro dominio.
"""

import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from config.exceptions import ConfigurationError
from .reader import SentencePair, write_lines

logger = logging.getLogger(__name__)

TOY_KINDS = ('copy', 'reverse', 'substitution-grammar')


@dataclass(frozen=True)
class SubstitutionTable:
    mapping: dict
    swap_tokens: frozenset = frozenset()

    def translate(self, words):
        out = [self.mapping.get(w, w) for w in words]
        result, i = [], 0
        while i < len(words):
            # Reordenamiento local: la palabra modificadora va detrás de la siguiente
            if words[i] in self.swap_tokens and i + 1 < len(words):
                result.extend([out[i + 1], out[i]])
                i += 2
            else:
                result.append(out[i])
                i += 1
        return result


@dataclass
class ToyTask:
    kind: str
    ood_train: list
    ood_dev: list
    train: list
    dev: list
    test: list
    ood_table: SubstitutionTable = None
    in_domain_table: SubstitutionTable = None
    meta: dict = field(default_factory=dict)

    SPLITS = ('ood_train', 'ood_dev', 'train', 'dev', 'test')

    def write(self, directory):
        """Escribe cada partición como <split>.src / <split>.tgt."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        for split in self.SPLITS:
            pairs = getattr(self, split)
            write_lines(directory / f"{split}.src", (p.src_text for p in pairs))
            write_lines(directory / f"{split}.tgt", (p.tgt_text for p in pairs))
        return directory


def _source_words(vocab_size):
    return [f"w{i}" for i in range(vocab_size)]


def _build_table(rng, vocab_size, kind):
    words = _source_words(vocab_size)
    if kind != 'substitution-grammar':
        return SubstitutionTable({w: w for w in words})
    targets = [f"t{i}" for i in rng.permutation(vocab_size)]
    swap = rng.random(vocab_size) < 0.25
    return SubstitutionTable(dict(zip(words, targets)), frozenset(w for w, s in zip(words, swap) if s))


def _shift_table(rng, table, fraction):
    """Reasigna de forma cíclica los destinos de una fracción de las palabras."""
    if not fraction:
        return table
    keys = sorted(table.mapping)
    count = int(round(fraction * len(keys)))
    if count < 2:
        count = min(2, len(keys))
    chosen = [keys[i] for i in sorted(rng.choice(len(keys), size=count, replace=False))]
    mapping = dict(table.mapping)
    targets = [mapping[k] for k in chosen]
    for key, target in zip(chosen, targets[1:] + targets[:1]):
        mapping[key] = target
    return SubstitutionTable(mapping, table.swap_tokens)


def _sample(rng, n, vocab_size, max_len, kind, table):
    words = _source_words(vocab_size)
    pairs = []
    for _ in range(n):
        length = int(rng.integers(1, max_len + 1))
        src = [words[i] for i in rng.integers(0, vocab_size, size=length)]
        if kind == 'copy':
            tgt = list(src)
        elif kind == 'reverse':
            tgt = src[::-1]
        else:
            tgt = table.translate(src)
        pairs.append(SentencePair(" ".join(src), " ".join(tgt)))
    return pairs


def generate_toy_task(kind, n_train, n_test, vocab_size=20, max_len=8, seed=0, domain_shift=None):
    """
    Corpus de juguete deterministas para una semilla dada.

    `domain_shift` es la fracción (0-1) de la tabla de sustitución que cambia
    entre el dominio externo (entrenamiento offline) y el propio (adaptación
    y prueba). Solo afecta a substitution-grammar.
    """
    if kind not in TOY_KINDS:
        raise ConfigurationError(f"tarea desconocida: {kind!r} (opciones: {', '.join(TOY_KINDS)})")
    if n_train < 1 or n_test < 1 or vocab_size < 1 or max_len < 1:
        raise ConfigurationError("n_train, n_test, vocab_size y max_len deben ser >= 1")
    fraction = float(domain_shift or 0.0)
    if not 0.0 <= fraction <= 1.0:
        raise ConfigurationError(f"domain_shift debe estar en [0, 1], se recibió {fraction}")
    if fraction and kind != 'substitution-grammar':
        logger.info("domain_shift no aplica a la tarea %s; se ignora", kind)
        fraction = 0.0

    rng = np.random.default_rng(seed)
    ood_table = _build_table(rng, vocab_size, kind)
    in_table = _shift_table(rng, ood_table, fraction)
    n_dev = max(1, n_test // 2)
    task = ToyTask(
        kind=kind,
        ood_train=_sample(rng, n_train, vocab_size, max_len, kind, ood_table),
        ood_dev=_sample(rng, n_dev, vocab_size, max_len, kind, ood_table),
        train=_sample(rng, n_train, vocab_size, max_len, kind, in_table),
        dev=_sample(rng, n_dev, vocab_size, max_len, kind, in_table),
        test=_sample(rng, n_test, vocab_size, max_len, kind, in_table),
        ood_table=ood_table,
        in_domain_table=in_table,
        meta={'vocab_size': vocab_size, 'max_len': max_len, 'seed': seed, 'domain_shift': fraction},
    )
    logger.info("tarea %s generada: %d entrenamiento, %d prueba (desplazamiento %.2f)",
                kind, n_train, n_test, fraction)
    return task
