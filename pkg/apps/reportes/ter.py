"""
Translation Edit Rate (sacrebleu, compatible con tercom).

Ediciones = inserciones + borrados + sustituciones + desplazamientos de
bloque (cada desplazamiento cuesta 1; bloques de hasta 10 palabras movidos
como mucho 50 posiciones). El TER de corpus es el total de ediciones sobre
el total de palabras de referencia, × 100, sin recortar a 100.
"""

from functools import lru_cache

import numpy as np
from sacrebleu.metrics import TER

from config.exceptions import MetricError
from .bleu import as_text, as_tokens, check_parallel


@lru_cache(maxsize=None)
def _metric():
    return TER(case_sensitive=True)


def edit_distance(hyp, ref):
    """Levenshtein de palabras con costo 1 para inserción, borrado y sustitución."""
    previous = list(range(len(ref) + 1))
    for i, word in enumerate(hyp, start=1):
        current = [i] + [0] * len(ref)
        for j, target in enumerate(ref, start=1):
            current[j] = min(
                previous[j] + 1,
                current[j - 1] + 1,
                previous[j - 1] + (word != target),
            )
        previous = current
    return previous[-1]


def _check_references(refs):
    for i, ref in enumerate(refs, start=1):
        if not as_tokens(ref):
            raise MetricError(f"referencia vacía en la oración {i}: TER no está definido")


def corpus_stats(hyps, refs, shifts=True):
    """Matriz (n_oraciones, 2): [ediciones, palabras de referencia]. Sin desplazamientos es el WER."""
    hyps, refs = check_parallel(hyps, refs)
    _check_references(refs)
    if not shifts:
        rows = [(edit_distance(as_tokens(h), as_tokens(r)), len(as_tokens(r))) for h, r in zip(hyps, refs)]
    else:
        rows = _metric()._extract_corpus_statistics([as_text(h) for h in hyps], [[as_text(r) for r in refs]])
    return np.asarray(rows, dtype=np.float64).reshape(len(hyps), 2)


def sentence_stats(hyp, ref, shifts=True):
    return corpus_stats([hyp], [ref], shifts)[0]


def sentence_edits(hyp, ref, shifts=True):
    return int(sentence_stats(hyp, ref, shifts)[0])


def ter_from_stats(stats):
    stats = np.asarray(stats, dtype=np.float64)
    if stats.ndim == 2:
        stats = stats.sum(axis=0)
    if stats[1] <= 0:
        raise MetricError("referencias vacías: TER no está definido")
    return float(_metric()._compute_score_from_stats([float(stats[0]), float(stats[1])]).score)


def ter(hyps, refs, shifts=True):
    return ter_from_stats(corpus_stats(hyps, refs, shifts))


def wer(hyps, refs):
    """TER sin desplazamientos."""
    return ter(hyps, refs, shifts=False)
