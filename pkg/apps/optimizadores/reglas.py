"""
Reglas de actualización por gradiente: SGD, Adagrad, Adadelta y Adam.

Cada regla modifica la ParameterSet in situ con un gradiente por oración
({nombre: arreglo}) y devuelve (params, state). Los cálculos se hacen en
float64 y se escriben de vuelta en el dtype de los parámetros.
"""

import numpy as np

from config.exceptions import DimensionError


def _aligned(params, grads):
    for name, tensor in params.items():
        if name not in grads:
            raise DimensionError('update', tensor.shape, ())
        grad = np.asarray(grads[name])
        if grad.shape != tensor.shape:
            raise DimensionError('update', tensor.shape, grad.shape)
        yield name, tensor, grad.astype(np.float64)


def _apply(tensor, delta):
    tensor.values[...] = (tensor.values.astype(np.float64) + delta).astype(tensor.dtype)


def sgd_update(params, grads, lr):
    """Θ ← Θ − ρ·∇L."""
    for _, tensor, grad in _aligned(params, grads):
        _apply(tensor, -lr * grad)
    return params


def adagrad_update(params, grads, state):
    """G ← G + g²;  Δθ = −ρ·g / √(G + ε)."""
    for name, tensor, grad in _aligned(params, grads):
        G = state.accumulator('sum_sq', name, tensor.shape)
        G += grad * grad
        _apply(tensor, -state.learning_rate * grad / np.sqrt(G + state.eps))
    state.step += 1
    return params, state


def adadelta_update(params, grads, state):
    """
    E[g²] ← γE[g²] + (1−γ)g²
    Δ = √(E[Δ²] + ε) / √(E[g²] + ε) · g
    E[Δ²] ← γE[Δ²] + (1−γ)Δ²
    θ ← θ − ρΔ
    """
    decay = state.decay
    for name, tensor, grad in _aligned(params, grads):
        avg_sq_grad = state.accumulator('avg_sq_grad', name, tensor.shape)
        avg_sq_delta = state.accumulator('avg_sq_delta', name, tensor.shape)
        avg_sq_grad *= decay
        avg_sq_grad += (1.0 - decay) * grad * grad
        delta = np.sqrt(avg_sq_delta + state.eps) / np.sqrt(avg_sq_grad + state.eps) * grad
        avg_sq_delta *= decay
        avg_sq_delta += (1.0 - decay) * delta * delta
        _apply(tensor, -state.learning_rate * delta)
    state.step += 1
    return params, state


def adam_update(params, grads, state):
    """Adam con corrección de sesgo: Δθ = −ρ·m̂ / (√v̂ + ε)."""
    state.step += 1
    t = state.step
    b1, b2 = state.beta1, state.beta2
    for name, tensor, grad in _aligned(params, grads):
        m = state.accumulator('m', name, tensor.shape)
        v = state.accumulator('v', name, tensor.shape)
        m *= b1
        m += (1.0 - b1) * grad
        v *= b2
        v += (1.0 - b2) * grad * grad
        m_hat = m / (1.0 - b1 ** t)
        v_hat = v / (1.0 - b2 ** t)
        _apply(tensor, -state.learning_rate * m_hat / (np.sqrt(v_hat) + state.eps))
    return params, state


RULES = {
    'adagrad': adagrad_update,
    'adadelta': adadelta_update,
    'adam': adam_update,
}


def gradient_update(params, grads, state):
    """Despacha según state.algorithm."""
    if state.algorithm == 'sgd':
        state.step += 1
        return sgd_update(params, grads, state.learning_rate), state
    return RULES[state.algorithm](params, grads, state)
