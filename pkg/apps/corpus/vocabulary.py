"""Vocabularios símbolo ↔ índice con los especiales reservados en 0-3."""

import logging
from collections import Counter
from pathlib import Path

from config.exceptions import CorpusError, VocabularyError

logger = logging.getLogger(__name__)

PAD, BOS, EOS, UNK = 0, 1, 2, 3
SPECIAL_SYMBOLS = ('<pad>', '<s>', '</s>', '<unk>')


class VocabularyMap:
    """
    Mapa biyectivo símbolo ↔ índice. Inmutable después de construido, así que
    se puede compartir libremente entre hilos.
    """

    def __init__(self, symbols):
        symbols = list(symbols)
        if tuple(symbols[:len(SPECIAL_SYMBOLS)]) != SPECIAL_SYMBOLS:
            raise CorpusError("el vocabulario debe empezar con los símbolos especiales " + " ".join(SPECIAL_SYMBOLS))
        self._symbols = tuple(symbols)
        self._index = {}
        for i, symbol in enumerate(self._symbols):
            if symbol in self._index:
                raise CorpusError(f"símbolo duplicado en el vocabulario: {symbol!r}")
            self._index[symbol] = i

    def __len__(self):
        return len(self._symbols)

    def __contains__(self, symbol):
        return symbol in self._index

    def __eq__(self, other):
        return isinstance(other, VocabularyMap) and self._symbols == other._symbols

    @property
    def symbols(self):
        return self._symbols

    def index(self, symbol):
        return self._index.get(symbol, UNK)

    def symbol(self, index):
        if not 0 <= index < len(self._symbols):
            raise VocabularyError(index, len(self._symbols))
        return self._symbols[index]

    def encode(self, tokens):
        """Símbolos fuera del vocabulario van al índice <unk>."""
        return [self._index.get(token, UNK) for token in tokens]

    def decode(self, indices, strip_specials=True):
        tokens = []
        for i in indices:
            if strip_specials and i < len(SPECIAL_SYMBOLS):
                if i == EOS:
                    break
                if i != UNK:
                    continue
            tokens.append(self.symbol(i))
        return tokens

    # --- Persistencia: líneas "símbolo<TAB>índice" ---

    def save(self, path):
        with open(path, 'w', encoding='utf-8') as fh:
            for i, symbol in enumerate(self._symbols):
                fh.write(f"{symbol}\t{i}\n")

    @classmethod
    def load(cls, path):
        entries = []
        with open(path, encoding='utf-8') as fh:
            for line_number, line in enumerate(fh, start=1):
                line = line.rstrip('\n')
                if not line:
                    continue
                try:
                    symbol, index = line.rsplit('\t', 1)
                    entries.append((int(index), symbol))
                except ValueError:
                    raise CorpusError(f"{Path(path).name}:{line_number}: se esperaba 'símbolo<TAB>índice'")
        entries.sort()
        if [i for i, _ in entries] != list(range(len(entries))):
            raise CorpusError(f"{Path(path).name}: los índices del vocabulario no son contiguos desde 0")
        return cls(symbol for _, symbol in entries)


def build_vocab(corpus, max_size):
    """
    Construye el vocabulario de un corpus (iterable de listas de símbolos).

    Los más frecuentes primero; empates por orden lexicográfico. El tamaño
    total, especiales incluidos, no supera max_size.
    """
    if max_size < len(SPECIAL_SYMBOLS) + 1:
        raise CorpusError(f"max_size debe ser al menos {len(SPECIAL_SYMBOLS) + 1}, se recibió {max_size}")
    counts = Counter()
    for tokens in corpus:
        counts.update(tokens)
    for special in SPECIAL_SYMBOLS:
        counts.pop(special, None)
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    kept = [symbol for symbol, _ in ranked[:max_size - len(SPECIAL_SYMBOLS)]]
    if len(kept) < len(ranked):
        logger.info("vocabulario truncado: %d de %d símbolos", len(kept), len(ranked))
    return VocabularyMap(list(SPECIAL_SYMBOLS) + kept)
