import numpy as np
from django.conf import settings

from .bleu import bleu_from_stats
from .ter import ter_from_stats

METRICS = {
    'bleu': bleu_from_stats,
    'ter': ter_from_stats,
}


def _metric_fn(metric):
    return METRICS[metric] if isinstance(metric, str) else metric


def bootstrap_ci(per_sentence_stats, n_resamples=None, seed=0, metric='bleu', confidence=95.0):
    """
    Intervalo percentil por remuestreo de oraciones con reemplazo.

    En cada remuestra el métrico de corpus se recalcula desde las
    estadísticas suficientes sumadas. Devuelve (punto, bajo, alto) con los
    percentiles tal cual salen de las remuestras.
    """
    stats = np.asarray(per_sentence_stats)
    n_resamples = n_resamples or settings.METRIC_DEFAULTS['bootstrap_samples']
    if n_resamples < 1:
        raise ValueError(f"n_resamples debe ser >= 1, se recibió {n_resamples}")
    fn = _metric_fn(metric)
    point = fn(stats.sum(axis=0))

    rng = np.random.default_rng(seed)
    n = stats.shape[0]
    scores = np.empty(n_resamples)
    for r in range(n_resamples):
        indices = rng.integers(0, n, size=n)
        scores[r] = fn(stats[indices].sum(axis=0))
    tail = (100.0 - confidence) / 2.0
    low, high = np.percentile(scores, [tail, 100.0 - tail])
    return point, float(low), float(high)


def cumulative_curve(per_sentence_stats, metric='bleu', smooth=None):
    """
    Métrico de corpus sobre los prefijos 1..n (estadísticas acumuladas, no
    media de puntuaciones por oración). BLEU se suaviza por defecto para que
    los primeros puntos estén definidos.
    """
    stats = np.asarray(per_sentence_stats)
    prefixes = np.cumsum(stats, axis=0)
    if metric == 'bleu':
        smooth = True if smooth is None else smooth
        return [bleu_from_stats(row, smooth=smooth) for row in prefixes]
    fn = _metric_fn(metric)
    return [fn(row) for row in prefixes]
