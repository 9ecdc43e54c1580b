from dataclasses import dataclass, field

import numpy as np

from config.exceptions import ConfigurationError

GRADIENT_ALGORITHMS = ('sgd', 'adagrad', 'adadelta', 'adam')
PA_ALGORITHMS = ('pas', 'ppas')
ALGORITHMS = ('none',) + GRADIENT_ALGORITHMS + PA_ALGORITHMS


@dataclass
class OptimizerState:
    """
    Estado de un optimizador durante una sesión.

    `accumulators` agrupa los arreglos por clase (sum_sq, avg_sq_grad,
    avg_sq_delta, m, v) y dentro de cada clase por nombre de parámetro. Todos
    los acumuladores se guardan en float64.
    """
    algorithm: str
    learning_rate: float
    eps: float = 1e-8
    decay: float = 0.95
    beta1: float = 0.9
    beta2: float = 0.999
    step: int = 0
    accumulators: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(f"optimizador desconocido: {self.algorithm!r} (opciones: {', '.join(ALGORITHMS)})")

    def accumulator(self, kind, name, shape):
        """Acumulador inicializado en cero la primera vez que se pide."""
        slot = self.accumulators.setdefault(kind, {})
        if name not in slot:
            slot[name] = np.zeros(shape, dtype=np.float64)
        return slot[name]

    def to_dict(self):
        """Forma serializable a JSON; los floats de Python conservan los bits de float64."""
        return {
            'algorithm': self.algorithm,
            'learning_rate': self.learning_rate,
            'eps': self.eps,
            'decay': self.decay,
            'beta1': self.beta1,
            'beta2': self.beta2,
            'step': self.step,
            'accumulators': {
                kind: {name: {'shape': list(a.shape), 'data': a.reshape(-1).tolist()} for name, a in slot.items()}
                for kind, slot in self.accumulators.items()
            },
        }

    @classmethod
    def from_dict(cls, data):
        accumulators = {
            kind: {
                name: np.array(entry['data'], dtype=np.float64).reshape(entry['shape'])
                for name, entry in slot.items()
            }
            for kind, slot in data.get('accumulators', {}).items()
        }
        return cls(
            algorithm=data['algorithm'],
            learning_rate=data['learning_rate'],
            eps=data['eps'],
            decay=data['decay'],
            beta1=data['beta1'],
            beta2=data['beta2'],
            step=data['step'],
            accumulators=accumulators,
        )

    def equals(self, other):
        """Igualdad exacta, acumuladores incluidos."""
        scalars = ('algorithm', 'learning_rate', 'eps', 'decay', 'beta1', 'beta2', 'step')
        if any(getattr(self, name) != getattr(other, name) for name in scalars):
            return False
        if self.accumulators.keys() != other.accumulators.keys():
            return False
        for kind, slot in self.accumulators.items():
            theirs = other.accumulators[kind]
            if slot.keys() != theirs.keys():
                return False
            if not all(np.array_equal(a, theirs[name]) for name, a in slot.items()):
                return False
        return True
