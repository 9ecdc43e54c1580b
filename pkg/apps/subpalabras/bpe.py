"""
Byte pair encoding conjunto (fuente + destino).

Convención de fin de palabra: la última subpalabra de cada palabra lleva el
sufijo '</w>'. Así la segmentación se invierte concatenando subpalabras y
cortando en cada marcador.
"""

import hashlib
import logging
from collections import Counter
from pathlib import Path

from config.exceptions import CorpusError
from .tokenizer import tokenize

logger = logging.getLogger(__name__)

END_OF_WORD = '</w>'
FORMAT_VERSION = 1


def _word_symbols(word):
    return tuple(word[:-1]) + (word[-1] + END_OF_WORD,)


def _merge_pair(symbols, pair):
    """Aplica una fusión a todas las apariciones, de izquierda a derecha."""
    merged, i = [], 0
    while i < len(symbols):
        if i + 1 < len(symbols) and (symbols[i], symbols[i + 1]) == pair:
            merged.append(symbols[i] + symbols[i + 1])
            i += 2
        else:
            merged.append(symbols[i])
            i += 1
    return tuple(merged)


class MergeTable:
    """Lista ordenada de fusiones (par de símbolos → símbolo fusionado)."""

    def __init__(self, merges, fingerprint=''):
        self.merges = tuple(tuple(pair) for pair in merges)
        self.ranks = {}
        for rank, pair in enumerate(self.merges):
            if pair in self.ranks:
                raise CorpusError(f"fusión duplicada en la tabla BPE: {pair[0]} {pair[1]}")
            self.ranks[pair] = rank
        self.fingerprint = fingerprint
        self._cache = {}

    def __len__(self):
        return len(self.merges)

    def __eq__(self, other):
        return isinstance(other, MergeTable) and self.merges == other.merges

    def segment_word(self, word):
        """
        Reproduce las fusiones en orden de aprendizaje. Fusionar siempre el par
        de menor rango es equivalente a reproducirlas una por una: un par
        creado por la fusión r solo puede tener rango mayor que r.
        """
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        symbols = _word_symbols(word)
        while len(symbols) > 1:
            ranked = [(self.ranks[p], p) for p in zip(symbols, symbols[1:]) if p in self.ranks]
            if not ranked:
                break
            symbols = _merge_pair(symbols, min(ranked)[1])
        self._cache[word] = symbols
        return symbols

    def apply(self, tokens):
        subwords = []
        for word in tokens:
            subwords.extend(self.segment_word(word))
        return subwords

    # --- Archivo: "#version: 1 fingerprint=..." y luego "izq der" por línea ---

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as fh:
            fh.write(f"#version: {FORMAT_VERSION} fingerprint={self.fingerprint}\n")
            for left, right in self.merges:
                fh.write(f"{left} {right}\n")

    @classmethod
    def load(cls, path):
        with open(path, encoding='utf-8') as fh:
            header = fh.readline().strip()
            if not header.startswith('#version:'):
                raise CorpusError(f"{Path(path).name}: falta la cabecera '#version:'")
            version, _, rest = header[len('#version:'):].strip().partition(' ')
            if version != str(FORMAT_VERSION):
                raise CorpusError(f"{Path(path).name}: versión de tabla BPE {version} no soportada")
            fingerprint = rest.partition('fingerprint=')[2]
            merges = []
            for line_number, line in enumerate(fh, start=2):
                parts = line.split()
                if not parts:
                    continue
                if len(parts) != 2:
                    raise CorpusError(f"{Path(path).name}:{line_number}: se esperaban dos símbolos")
                merges.append(tuple(parts))
        return cls(merges, fingerprint)


def _sentences(corpus):
    for sentence in corpus:
        yield tokenize(sentence) if isinstance(sentence, str) else sentence


def learn_bpe(corpus, num_merges, min_frequency=2):
    """
    Aprende hasta num_merges fusiones sobre el corpus conjunto (iterable de
    oraciones, ya tokenizadas o en texto).

    Cada paso fusiona el par más frecuente; los empates se resuelven por orden
    lexicográfico del par. Se detiene antes si el mejor par aparece menos de
    min_frequency veces.
    """
    if num_merges < 0:
        raise ValueError(f"num_merges no puede ser negativo: {num_merges}")
    word_counts = Counter()
    for tokens in _sentences(corpus):
        word_counts.update(tokens)
    if not word_counts:
        raise CorpusError("no se puede aprender BPE de un corpus vacío")

    digest = hashlib.sha1()
    for word, count in sorted(word_counts.items()):
        digest.update(f"{word}\t{count}\n".encode('utf-8'))
    fingerprint = digest.hexdigest()[:16]

    vocab = {_word_symbols(word): count for word, count in word_counts.items()}
    merges = []
    while len(merges) < num_merges:
        pair_counts = Counter()
        for symbols, count in vocab.items():
            for pair in zip(symbols, symbols[1:]):
                pair_counts[pair] += count
        if not pair_counts:
            break
        best, count = min(pair_counts.items(), key=lambda item: (-item[1], item[0]))
        if count < min_frequency:
            break
        merges.append(best)
        vocab = {_merge_pair(symbols, best): c for symbols, c in vocab.items()}

    logger.info("BPE: %d fusiones aprendidas (pedidas %d) sobre %d palabras distintas",
                len(merges), num_merges, len(word_counts))
    return MergeTable(merges, fingerprint)


def apply_bpe(sentence, table):
    """Segmenta una oración (texto o lista de tokens) en subpalabras."""
    tokens = tokenize(sentence) if isinstance(sentence, str) else sentence
    return table.apply(tokens)


def restore(subwords):
    """Invierte la segmentación: concatena y corta en cada '</w>'."""
    words, current = [], ''
    for piece in subwords:
        if piece.endswith(END_OF_WORD):
            words.append(current + piece[:-len(END_OF_WORD)])
            current = ''
        else:
            current += piece
    if current:
        words.append(current)
    return words


def coverage(corpus, vocab):
    """Fracción de subpalabras (ocurrencias) del corpus presentes en vocab."""
    total = covered = 0
    for tokens in corpus:
        for token in tokens:
            total += 1
            covered += token in vocab
    return covered / total if total else 0.0
