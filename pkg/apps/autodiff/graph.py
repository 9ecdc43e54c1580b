"""
Grafo de diferenciación automática en modo reverso.

Cada operación es un método de una instancia de Graph: el grafo guarda los
nodos en el orden en que se crean (orden topológico por construcción) y
backward() los recorre una sola vez en orden inverso. No hay estado global,
así que grafos distintos pueden vivir en hilos distintos.
"""

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from config.exceptions import DimensionError, GraphError, VocabularyError
from .tensor import Tensor

logger = logging.getLogger(__name__)


@dataclass
class Node:
    op: str
    inputs: tuple
    output: Tensor
    rule: Callable


class Graph:
    """
    Cinta de operaciones. Con record=False solo se calculan valores
    (inferencia, búsqueda en haz) y no se puede llamar a backward().
    """

    def __init__(self, record=True):
        self.record = record
        self.nodes = []

    # --- Registro de nodos ---

    def _emit(self, op, inputs, values, rule):
        out = Tensor(np.asarray(values))
        out.graph = self
        if self.record and any(t.requires_grad for t in inputs):
            out.requires_grad = True
            self.nodes.append(Node(op, tuple(inputs), out, rule))
        return out

    @staticmethod
    def _as_tensor(value):
        return value if isinstance(value, Tensor) else Tensor(value)

    # --- Operaciones ---

    def matmul(self, a, b):
        av, bv = a.values, b.values
        if av.ndim not in (1, 2) or bv.ndim not in (1, 2) or av.shape[-1] != bv.shape[0]:
            raise DimensionError('matmul', a.shape, b.shape)

        def rule(g):
            a2 = av.reshape(1, -1) if av.ndim == 1 else av
            b2 = bv.reshape(-1, 1) if bv.ndim == 1 else bv
            g2 = np.reshape(g, (a2.shape[0], b2.shape[1]))
            return (g2 @ b2.T).reshape(av.shape), (a2.T @ g2).reshape(bv.shape)

        return self._emit('matmul', (a, b), av @ bv, rule)

    def add(self, a, b):
        av, bv = a.values, b.values
        if av.shape == bv.shape:
            return self._emit('add', (a, b), av + bv, lambda g: (g, g))
        # Único broadcasting permitido: sesgo sobre el eje principal
        if av.ndim == 2 and bv.ndim == 1 and av.shape[1] == bv.shape[0]:
            return self._emit('add', (a, b), av + bv, lambda g: (g, g.sum(axis=0)))
        raise DimensionError('add', a.shape, b.shape)

    def sub(self, a, b):
        if a.shape != b.shape:
            raise DimensionError('sub', a.shape, b.shape)
        return self._emit('sub', (a, b), a.values - b.values, lambda g: (g, -g))

    def mul(self, a, b):
        av, bv = a.values, b.values
        if av.shape != bv.shape:
            raise DimensionError('mul', a.shape, b.shape)
        return self._emit('mul', (a, b), av * bv, lambda g: (g * bv, g * av))

    def scale(self, a, factor):
        factor = float(factor)
        out = (a.values * factor).astype(a.dtype, copy=False)
        return self._emit('scale', (a,), out, lambda g: (g * factor,))

    def concat(self, tensors: Sequence[Tensor], axis=-1):
        tensors = list(tensors)
        if not tensors:
            raise DimensionError('concat', ())
        ndim = tensors[0].values.ndim
        axis = axis % ndim
        for t in tensors[1:]:
            other = [s for i, s in enumerate(t.shape) if i != axis]
            first = [s for i, s in enumerate(tensors[0].shape) if i != axis]
            if t.values.ndim != ndim or other != first:
                raise DimensionError('concat', tensors[0].shape, t.shape)
        sizes = [t.shape[axis] for t in tensors]
        bounds = np.cumsum(sizes)[:-1]

        def rule(g):
            return tuple(np.split(g, bounds, axis=axis))

        return self._emit('concat', tensors, np.concatenate([t.values for t in tensors], axis=axis), rule)

    def stack(self, tensors: Sequence[Tensor]):
        tensors = list(tensors)
        if not tensors:
            raise DimensionError('stack', ())
        for t in tensors[1:]:
            if t.shape != tensors[0].shape:
                raise DimensionError('stack', tensors[0].shape, t.shape)

        def rule(g):
            return tuple(g[i] for i in range(len(tensors)))

        return self._emit('stack', tensors, np.stack([t.values for t in tensors]), rule)

    def slice(self, a, start, stop):
        av = a.values
        if not 0 <= start < stop <= av.shape[-1]:
            raise DimensionError('slice', a.shape, (start, stop))

        def rule(g):
            full = np.zeros_like(av)
            full[..., start:stop] = g
            return (full,)

        return self._emit('slice', (a,), av[..., start:stop], rule)

    def reshape(self, a, shape):
        av = a.values
        shape = tuple(shape)
        if int(np.prod(shape)) != av.size:
            raise DimensionError('reshape', a.shape, shape)
        return self._emit('reshape', (a,), av.reshape(shape), lambda g: (np.reshape(g, av.shape),))

    def tanh(self, a):
        out = np.tanh(a.values)
        return self._emit('tanh', (a,), out, lambda g: (g * (1.0 - out * out),))

    def sigmoid(self, a):
        # Forma estable: sigmoid(x) = (1 + tanh(x/2)) / 2
        out = 0.5 * (1.0 + np.tanh(0.5 * a.values))
        return self._emit('sigmoid', (a,), out, lambda g: (g * out * (1.0 - out),))

    def exp(self, a):
        out = np.exp(a.values)
        return self._emit('exp', (a,), out, lambda g: (g * out,))

    def log(self, a):
        av = a.values
        return self._emit('log', (a,), np.log(av), lambda g: (g / av,))

    def softmax(self, a):
        av = a.values
        if av.ndim == 0 or av.shape[-1] == 0:
            raise DimensionError('softmax', a.shape)
        shifted = av - av.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        out = e / e.sum(axis=-1, keepdims=True)

        def rule(g):
            return (out * (g - (g * out).sum(axis=-1, keepdims=True)),)

        return self._emit('softmax', (a,), out, rule)

    def log_softmax(self, a):
        av = a.values
        if av.ndim == 0 or av.shape[-1] == 0:
            raise DimensionError('log_softmax', a.shape)
        out = _log_softmax(av)

        def rule(g):
            return (g - np.exp(out) * g.sum(axis=-1, keepdims=True),)

        return self._emit('log_softmax', (a,), out, rule)

    def embedding_lookup(self, table, ids):
        tv = table.values
        if tv.ndim != 2:
            raise DimensionError('embedding_lookup', table.shape)
        index = np.asarray(ids, dtype=np.int64)
        if index.size and (index.min() < 0 or index.max() >= tv.shape[0]):
            bad = int(index[(index < 0) | (index >= tv.shape[0])].reshape(-1)[0])
            raise VocabularyError(bad, tv.shape[0], side='embedding')

        def rule(g):
            full = np.zeros_like(tv)
            np.add.at(full, index, g)
            return (full,)

        return self._emit('embedding_lookup', (table,), tv[index], rule)

    def cross_entropy(self, logits, target):
        """-log softmax(logits)[target], con log-softmax fusionado."""
        lv = logits.values
        if lv.ndim != 1 or lv.shape[0] == 0:
            raise DimensionError('cross_entropy', logits.shape)
        if not 0 <= target < lv.shape[0]:
            raise VocabularyError(target, lv.shape[0])
        log_probs = _log_softmax(lv)

        def rule(g):
            grad = np.exp(log_probs)
            grad[target] -= 1.0
            return (g * grad,)

        return self._emit('cross_entropy', (logits,), -log_probs[target], rule)

    def sum(self, a):
        av = a.values
        return self._emit('sum', (a,), av.sum(), lambda g: (np.full_like(av, g),))

    # --- Retropropagación ---

    def backward(self, loss, reset=True):
        """
        Llena .grad de todos los tensores rastreados con dLoss/dtensor.

        Por defecto pone a cero los gradientes de las hojas antes de empezar;
        con reset=False los acumula sobre lo que ya tenían.
        """
        if not isinstance(loss, Tensor) or loss.size != 1:
            shape = loss.shape if isinstance(loss, Tensor) else type(loss).__name__
            raise GraphError(f"backward requiere una pérdida escalar, se recibió forma {shape}")
        if loss.graph is not self or not loss.requires_grad:
            raise GraphError("la pérdida no pertenece a este grafo (grafo desconectado)")

        produced = set()
        for node in self.nodes:
            node.output.grad = np.zeros_like(node.output.values)
            produced.add(id(node.output))

        seen = set()
        for node in self.nodes:
            for leaf in node.inputs:
                if not leaf.requires_grad or id(leaf) in produced or id(leaf) in seen:
                    continue
                seen.add(id(leaf))
                if reset or leaf.grad is None:
                    leaf.grad = np.zeros_like(leaf.values)

        loss.grad = np.ones_like(loss.values)
        for node in reversed(self.nodes):
            grads = node.rule(node.output.grad)
            for tensor, grad in zip(node.inputs, grads):
                if grad is None or not tensor.requires_grad:
                    continue
                tensor.grad += np.reshape(grad, tensor.shape).astype(tensor.dtype, copy=False)


def _log_softmax(values):
    shifted = values - values.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))
