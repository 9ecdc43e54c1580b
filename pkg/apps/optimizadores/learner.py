import itertools
import logging
from dataclasses import asdict, dataclass

import numpy as np
from django.conf import settings

from apps.autodiff.utils import clip_global_norm
from apps.corpus.vocabulary import EOS
from config.exceptions import ConfigurationError
from .pasivo_agresivo import PAConfig, pa_update
from .reglas import gradient_update
from .state import ALGORITHMS, GRADIENT_ALGORITHMS, PA_ALGORITHMS, OptimizerState

logger = logging.getLogger(__name__)

GRID_EXPONENTS = range(0, 7)


@dataclass(frozen=True)
class OptimizerSpec:
    """Algoritmo y sus hiperparámetros para una sesión de aprendizaje en línea."""
    name: str
    lr: float
    C: float = None
    k_max: int = 10
    clip_norm: float = 1.0
    true_projection: bool = False

    def __post_init__(self):
        if self.name not in ALGORITHMS:
            raise ConfigurationError(f"optimizador desconocido: {self.name!r} (opciones: {', '.join(ALGORITHMS)})")
        if self.name != 'none' and self.lr <= 0:
            raise ConfigurationError(f"{self.name}: lr debe ser positivo, se recibió {self.lr}")
        if self.name in PA_ALGORITHMS and (self.C is None or self.C <= 0):
            raise ConfigurationError(f"{self.name}: C debe ser positivo, se recibió {self.C}")
        if self.clip_norm is not None and self.clip_norm <= 0:
            raise ConfigurationError(f"clip_norm debe ser positivo, se recibió {self.clip_norm}")

    @classmethod
    def from_settings(cls, name, **overrides):
        """Valores de OPTIMIZER_DEFAULTS/OPTIMIZER_COMMON; los overrides None se ignoran."""
        if name not in settings.OPTIMIZER_DEFAULTS:
            raise ConfigurationError(f"optimizador desconocido: {name!r} (opciones: {', '.join(ALGORITHMS)})")
        values = dict(settings.OPTIMIZER_COMMON)
        defaults = settings.OPTIMIZER_DEFAULTS[name]
        values['lr'] = defaults['lr']
        if 'C' in defaults:
            values['C'] = defaults['C']
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(name=name, **values)

    @property
    def pa_config(self):
        return PAConfig(lr=self.lr, C=self.C, k_max=self.k_max, clip_norm=self.clip_norm,
                        true_projection=self.true_projection)

    def new_state(self):
        defaults = settings.OPTIMIZER_DEFAULTS.get(self.name, {})
        extra = {k: defaults[k] for k in ('eps', 'decay', 'beta1', 'beta2') if k in defaults}
        return OptimizerState(algorithm=self.name, learning_rate=self.lr, **extra)

    def to_dict(self):
        return asdict(self)


@dataclass
class UpdateResult:
    status: str
    loss: float = 0.0
    inner_iterations: int = 0
    displacement_norm: float = 0.0


class OnlineLearner:
    """
    Dueño del estado del optimizador durante una sesión. Las actualizaciones
    son estrictamente secuenciales.

    `ref` son los ids de la referencia sin </s>; `hyp` es la Hypothesis (o sus
    tokens) que produjo el modelo antes de actualizar.
    """

    def __init__(self, spec, state=None):
        self.spec = spec
        self.state = state or spec.new_state()

    def update(self, model, params, src, ref, hyp):
        ref_tokens = tuple(ref) + (EOS,)
        if self.spec.name == 'none':
            return UpdateResult('frozen')
        if self.spec.name in PA_ALGORITHMS:
            result = pa_update(model, params, src, ref_tokens, hyp, self.spec.pa_config,
                               projected=self.spec.name == 'ppas')
            return UpdateResult(result.status, result.initial_loss, result.iterations, result.displacement_norm)
        return self._gradient_step(model, params, src, ref_tokens)

    def _gradient_step(self, model, params, src, ref_tokens):
        nll, grads = model.nll_and_gradients(src, list(ref_tokens), params)
        if not np.isfinite(nll) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            logger.warning("gradiente no finito; actualización %s omitida", self.spec.name)
            return UpdateResult('skipped', float(nll))
        if self.spec.clip_norm is not None:
            grads, _ = clip_global_norm(grads, self.spec.clip_norm)
        before = params.flat()
        gradient_update(params, grads, self.state)
        if not params.is_finite():
            logger.warning("parámetros no finitos tras %s; se restauran", self.spec.name)
            params.assign_flat(before)
            return UpdateResult('skipped', float(nll))
        return UpdateResult('applied', float(nll), 1, float(np.linalg.norm(params.flat() - before)))


def hyperparameter_grid(algorithm):
    """
    Candidatos 10⁰…10⁻⁶: solo ρ para los optimizadores por gradiente, ρ × C
    para PAS/PPAS.
    """
    values = [10.0 ** -a for a in GRID_EXPONENTS]
    if algorithm in PA_ALGORITHMS:
        return [{'lr': lr, 'C': C} for lr, C in itertools.product(values, values)]
    if algorithm in GRADIENT_ALGORITHMS:
        return [{'lr': lr} for lr in values]
    if algorithm == 'none':
        return [{}]
    raise ConfigurationError(f"optimizador desconocido: {algorithm!r}")
