import numpy as np


class Tensor:
    """
    Arreglo denso que participa en el grafo de diferenciación en modo reverso.

    `values` guarda el valor (orden row-major de numpy) y `grad` el gradiente
    acumulado, con la misma forma. `grad` solo existe cuando el tensor es
    rastreado (requires_grad) y después de un backward().
    """

    __slots__ = ('values', 'grad', 'requires_grad', 'graph', 'name')

    def __init__(self, values, requires_grad=False, name=None, dtype=None):
        if isinstance(values, Tensor):
            values = values.values
        array = np.asarray(values, dtype=dtype)
        if array.dtype.kind not in 'fc':
            array = array.astype(np.float64 if dtype is None else dtype)
        self.values = array
        self.grad = None
        self.requires_grad = requires_grad
        # Grafo que produjo este tensor (None para hojas)
        self.graph = None
        self.name = name

    @property
    def shape(self):
        return self.values.shape

    @property
    def size(self):
        return self.values.size

    @property
    def dtype(self):
        return self.values.dtype

    def item(self):
        return float(self.values.reshape(-1)[0])

    def numpy(self):
        return self.values

    def zero_grad(self):
        self.grad = np.zeros_like(self.values)

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"Tensor{label}(shape={self.shape}, requires_grad={self.requires_grad})"
