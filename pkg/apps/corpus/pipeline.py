import logging
from dataclasses import replace

from apps.subpalabras.bpe import restore
from apps.subpalabras.tokenizer import detokenize, tokenize
from config.exceptions import CheckpointError, CorpusError
from .vocabulary import build_vocab

logger = logging.getLogger(__name__)


class TextPipeline:
    """
    Texto ↔ índices: tokenizador, tabla BPE opcional y vocabularios.

    Las referencias se codifican sin </s>; el aprendiz lo añade.
    """

    def __init__(self, src_vocab, tgt_vocab, merges=None):
        self.src_vocab = src_vocab
        self.tgt_vocab = tgt_vocab
        self.merges = merges

    @classmethod
    def build(cls, pairs, max_vocab_size, merges=None):
        pairs = list(pairs)
        src_vocab = build_vocab((cls._segment(p.src_text, merges) for p in pairs), max_vocab_size)
        tgt_vocab = build_vocab((cls._segment(p.tgt_text, merges) for p in pairs), max_vocab_size)
        return cls(src_vocab, tgt_vocab, merges)

    @classmethod
    def from_checkpoint(cls, checkpoint):
        if checkpoint.src_vocab is None or checkpoint.tgt_vocab is None:
            raise CheckpointError("el checkpoint no incluye vocabularios; no se puede procesar texto")
        return cls(checkpoint.src_vocab, checkpoint.tgt_vocab, checkpoint.merges)

    @staticmethod
    def _segment(text, merges):
        tokens = tokenize(text)
        return merges.apply(tokens) if merges is not None else tokens

    def segment(self, text):
        return self._segment(text, self.merges)

    def encode_source(self, text):
        return tuple(self.src_vocab.encode(self.segment(text)))

    def encode_target(self, text):
        return tuple(self.tgt_vocab.encode(self.segment(text)))

    def encode_pair(self, pair):
        src, tgt = self.encode_source(pair.src_text), self.encode_target(pair.tgt_text)
        if not src or not tgt:
            raise CorpusError(f"par vacío tras tokenizar: {pair.src_text!r} / {pair.tgt_text!r}")
        return replace(pair, src=src, tgt=tgt)

    def encode_pairs(self, pairs):
        return [self.encode_pair(p) for p in pairs]

    def decode_target(self, indices):
        """Índices destino → texto; se corta en </s> y se deshace la segmentación."""
        pieces = self.tgt_vocab.decode(indices)
        words = restore(pieces) if self.merges is not None else pieces
        return detokenize(words)


def corpus_statistics(pairs):
    """Oraciones, palabras y tamaño de vocabulario por lado (texto tokenizado)."""
    sentences = 0
    running = {'src': 0, 'tgt': 0}
    vocab = {'src': set(), 'tgt': set()}
    for pair in pairs:
        sentences += 1
        for side, text in (('src', pair.src_text), ('tgt', pair.tgt_text)):
            tokens = tokenize(text)
            running[side] += len(tokens)
            vocab[side].update(tokens)
    return {
        'sentences': sentences,
        'src_running_words': running['src'],
        'tgt_running_words': running['tgt'],
        'src_vocabulary': len(vocab['src']),
        'tgt_vocabulary': len(vocab['tgt']),
    }
