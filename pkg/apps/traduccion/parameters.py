import numpy as np

from apps.autodiff.tensor import Tensor
from config.exceptions import DimensionError

# Puertas LSTM dentro de los bloques 4H: entrada, olvido, salida, candidata
LSTM_GATES = ('input', 'forget', 'output', 'candidate')
LSTM_BIASES = ('enc_fw_b', 'enc_bw_b', 'dec_b')


class ParameterSet:
    """
    Colección con nombre de todos los tensores Θ del modelo.

    El orden de los nombres es fijo durante toda la vida del modelo, así que la
    vista plana (flat) tiene siempre la misma longitud y disposición.
    """

    def __init__(self, arrays, dtype=None):
        self._tensors = {}
        for name, values in arrays.items():
            if isinstance(values, Tensor):
                values = values.values
            array = np.array(values, dtype=dtype if dtype is not None else np.asarray(values).dtype)
            self._tensors[name] = Tensor(array, requires_grad=True, name=name)

    # --- Construcción ---

    @classmethod
    def initialize(cls, config, seed=None):
        """Uniforme en [-init_scale, init_scale]; sesgos (`*_b`) a cero y sesgo de olvido a 1."""
        rng = np.random.default_rng(config.seed if seed is None else seed)
        arrays = {}
        for name, shape in config.parameter_shapes().items():
            if name.endswith('_b'):
                arrays[name] = np.zeros(shape)
            else:
                arrays[name] = rng.uniform(-config.init_scale, config.init_scale, size=shape)
        H = config.hidden_dim
        for name in LSTM_BIASES:
            arrays[name][H:2 * H] = 1.0
        return cls(arrays, dtype=config.dtype)

    @classmethod
    def zeros(cls, config):
        return cls({name: np.zeros(shape) for name, shape in config.parameter_shapes().items()}, dtype=config.dtype)

    # --- Acceso ---

    def __getitem__(self, name):
        return self._tensors[name]

    def __iter__(self):
        return iter(self._tensors)

    def __len__(self):
        return len(self._tensors)

    def __contains__(self, name):
        return name in self._tensors

    def items(self):
        return self._tensors.items()

    @property
    def names(self):
        return list(self._tensors)

    @property
    def dtype(self):
        return next(iter(self._tensors.values())).dtype

    @property
    def size(self):
        return sum(t.size for t in self._tensors.values())

    def shapes(self):
        return {name: t.shape for name, t in self._tensors.items()}

    def arrays(self):
        return {name: t.values for name, t in self._tensors.items()}

    def copy(self):
        return ParameterSet({name: t.values.copy() for name, t in self._tensors.items()})

    def is_finite(self):
        return all(np.all(np.isfinite(t.values)) for t in self._tensors.values())

    def equals(self, other):
        """Igualdad bit a bit."""
        return self.names == other.names and all(
            np.array_equal(t.values, other[name].values) for name, t in self._tensors.items()
        )

    # --- Gradientes ---

    def zero_grad(self):
        for t in self._tensors.values():
            t.grad = None

    def gradients(self):
        """Vista {nombre: gradiente}; ceros para los tensores sin gradiente."""
        return {
            name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.values))
            for name, t in self._tensors.items()
        }

    # --- Vista plana ---

    def flat(self):
        """Vector plano float64 con todos los parámetros concatenados."""
        return np.concatenate([t.values.reshape(-1).astype(np.float64) for t in self._tensors.values()])

    def flat_gradients(self, grads=None):
        grads = self.gradients() if grads is None else grads
        return np.concatenate([np.asarray(grads[name], dtype=np.float64).reshape(-1) for name in self._tensors])

    def unflatten(self, vector):
        vector = np.asarray(vector)
        if vector.size != self.size:
            raise DimensionError('unflatten', (self.size,), vector.shape)
        result, offset = {}, 0
        for name, t in self._tensors.items():
            result[name] = vector[offset:offset + t.size].reshape(t.shape)
            offset += t.size
        return result

    def assign_flat(self, vector):
        for name, values in self.unflatten(vector).items():
            tensor = self._tensors[name]
            tensor.values[...] = values.astype(tensor.dtype, copy=False)

    def assign(self, other):
        """Copia los valores de otra ParameterSet con la misma disposición."""
        for name, tensor in self._tensors.items():
            if other[name].shape != tensor.shape:
                raise DimensionError('assign', tensor.shape, other[name].shape)
            tensor.values[...] = other[name].values


def apply_weight_noise(params, sigma, rng_seed=None):
    """
    Copia transitoria de los parámetros con ruido gaussiano N(0, sigma²)
    independiente por peso. Con sigma 0 la copia es idéntica.

    `rng_seed` puede ser un entero o un numpy Generator ya creado.
    """
    if sigma < 0:
        raise ValueError(f"sigma no puede ser negativo: {sigma}")
    noisy = params.copy()
    if sigma == 0:
        return noisy
    rng = rng_seed if isinstance(rng_seed, np.random.Generator) else np.random.default_rng(rng_seed)
    for _, tensor in noisy.items():
        noise = rng.normal(0.0, sigma, size=tensor.shape)
        tensor.values[...] = tensor.values + noise.astype(tensor.dtype)
    return noisy
