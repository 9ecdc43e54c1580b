import numpy as np


def global_norm(grads):
    """Norma L2 de todos los gradientes concatenados."""
    total = 0.0
    for grad in grads.values():
        total += float(np.sum(np.square(grad, dtype=np.float64)))
    return float(np.sqrt(total))


def clip_global_norm(grads, max_norm):
    """
    Recorta los gradientes {nombre: arreglo} a norma global max_norm.

    Devuelve (gradientes, norma original). Si la norma no supera el máximo,
    los gradientes se devuelven sin tocar.
    """
    if max_norm <= 0:
        raise ValueError(f"max_norm debe ser positivo, se recibió {max_norm}")
    norm = global_norm(grads)
    if norm <= max_norm:
        return grads, norm
    factor = max_norm / norm
    return {name: (grad * factor).astype(grad.dtype, copy=False) for name, grad in grads.items()}, norm


def clip_vector(vector, max_norm):
    """Igual que clip_global_norm pero sobre un vector plano."""
    norm = float(np.linalg.norm(vector))
    if max_norm is None or norm <= max_norm:
        return vector, norm
    return vector * (max_norm / norm), norm
