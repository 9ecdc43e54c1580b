"""Comprobación de gradientes por diferencias finitas centrales (doble precisión)."""

import numpy as np


def numerical_gradient(func, array, eps=1e-4, indices=None):
    """
    Deriva func() respecto a las entradas de `array` (modificado in situ y
    restaurado). Si se pasan índices planos solo se evalúan esos.
    """
    flat = array.reshape(-1)
    if indices is None:
        indices = range(flat.size)
    result = {}
    for i in indices:
        original = flat[i]
        flat[i] = original + eps
        plus = func()
        flat[i] = original - eps
        minus = func()
        flat[i] = original
        result[i] = (plus - minus) / (2.0 * eps)
    return result


def relative_error(analytic, numeric, floor=1e-6):
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)
