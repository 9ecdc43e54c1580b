"""
BLEU de corpus a partir de estadísticas suficientes por oración (sacrebleu).

Cada oración aporta el vector de sacrebleu
    [longitud hipótesis, longitud referencia, aciertos_1..4, totales_1..4]
y el BLEU de cualquier subconjunto se recalcula sumando esos vectores. Así
funcionan igual el corpus completo, el bootstrap y las curvas acumuladas.

Las oraciones ya vienen tokenizadas (tokenize='none'). Con effective_order los
órdenes sin n-gramas en la hipótesis no entran en la media geométrica, así
que una hipótesis corta idéntica a su referencia vale 100.
"""

from functools import lru_cache

import numpy as np
from sacrebleu.metrics import BLEU

from config.exceptions import MetricError

NGRAM_ORDER = 4
STATS_WIDTH = 2 + 2 * NGRAM_ORDER
SMOOTH_VALUE = 1


def as_text(sentence):
    return sentence if isinstance(sentence, str) else " ".join(str(t) for t in sentence)


def as_tokens(sentence):
    return sentence.split() if isinstance(sentence, str) else list(sentence)


def check_parallel(hyps, refs):
    hyps, refs = list(hyps), list(refs)
    if len(hyps) != len(refs):
        raise MetricError(f"número de hipótesis y referencias distinto: {len(hyps)} != {len(refs)}")
    if not hyps:
        raise MetricError("se necesita al menos una oración para evaluar")
    return hyps, refs


@lru_cache(maxsize=None)
def _metric():
    return BLEU(tokenize='none', effective_order=True, max_ngram_order=NGRAM_ORDER)


def corpus_stats(hyps, refs):
    """Matriz int64 (n_oraciones, STATS_WIDTH)."""
    hyps, refs = check_parallel(hyps, refs)
    rows = _metric()._extract_corpus_statistics([as_text(h) for h in hyps], [[as_text(r) for r in refs]])
    return np.asarray(rows, dtype=np.int64).reshape(len(hyps), STATS_WIDTH)


def sentence_stats(hyp, ref):
    return corpus_stats([hyp], [ref])[0]


def bleu_details(stats, smooth=False):
    """BLEUScore de sacrebleu (score, precisions, bp, sys_len, ref_len) de unas estadísticas."""
    stats = np.asarray(stats)
    if stats.ndim == 2:
        stats = stats.sum(axis=0)
    values = [int(v) for v in stats]
    return BLEU.compute_bleu(
        correct=values[2:2 + NGRAM_ORDER],
        total=values[2 + NGRAM_ORDER:],
        sys_len=values[0],
        ref_len=values[1],
        smooth_method='add-k' if smooth else 'none',
        smooth_value=SMOOTH_VALUE if smooth else None,
        effective_order=True,
        max_ngram_order=NGRAM_ORDER,
    )


def bleu_from_stats(stats, smooth=False):
    """
    BLEU de unas estadísticas ya sumadas, en [0, 100].

    Sin suavizado, una precisión nula da BLEU 0; con smooth=True los órdenes
    n > 1 usan (m + 1) / (t + 1).
    """
    return min(float(bleu_details(stats, smooth).score), 100.0)


def bleu(hyps, refs, smooth=False):
    """BLEU de corpus (n-gramas 1-4, media geométrica × penalización por brevedad)."""
    return bleu_from_stats(corpus_stats(hyps, refs), smooth=smooth)
