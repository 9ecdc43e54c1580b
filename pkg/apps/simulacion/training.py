"""
Entrenamiento offline: una oración por actualización, evaluación periódica
del BLEU de desarrollo y parada temprana por paciencia.
"""

import logging
from dataclasses import asdict, dataclass

import numpy as np
from django.conf import settings

from apps.autodiff.utils import clip_global_norm
from apps.corpus.vocabulary import EOS
from apps.optimizadores.reglas import gradient_update
from apps.optimizadores.state import GRADIENT_ALGORITHMS, OptimizerState
from apps.reportes.bleu import bleu
from apps.traduccion.checkpoint import Checkpoint
from apps.traduccion.model import AttentionalModel
from apps.traduccion.parameters import ParameterSet, apply_weight_noise
from config.exceptions import ConfigurationError, CorpusError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TrainingConfig:
    optimizer: str = 'adadelta'
    lr: float = 1.0
    eval_every: int = 1000
    patience: int = 10000
    max_updates: int = 200000
    clip_norm: float = 1.0
    dev_beam_size: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.optimizer not in GRADIENT_ALGORITHMS:
            raise ConfigurationError(
                f"optimizador offline inválido: {self.optimizer!r} (opciones: {', '.join(GRADIENT_ALGORITHMS)})"
            )
        if self.lr <= 0:
            raise ConfigurationError(f"lr debe ser positivo, se recibió {self.lr}")
        if self.eval_every < 1 or self.max_updates < 1 or self.dev_beam_size < 1:
            raise ConfigurationError("eval_every, max_updates y dev_beam_size deben ser >= 1")
        if self.patience < 0:
            raise ConfigurationError(f"patience no puede ser negativa, se recibió {self.patience}")

    @classmethod
    def from_settings(cls, **overrides):
        values = dict(settings.TRAINING_DEFAULTS)
        values.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**values)

    def new_state(self):
        defaults = settings.OPTIMIZER_DEFAULTS.get(self.optimizer, {})
        extra = {k: defaults[k] for k in ('eps', 'decay', 'beta1', 'beta2') if k in defaults}
        return OptimizerState(algorithm=self.optimizer, learning_rate=self.lr, **extra)

    def to_dict(self):
        return asdict(self)


def _ids(tokens):
    return " ".join(str(t) for t in tokens if t != EOS)


def dev_bleu(model, params, dev_pairs, beam_size=1):
    """BLEU sobre índices del conjunto de desarrollo (greedy con beam 1)."""
    hyps = []
    for pair in dev_pairs:
        if beam_size == 1:
            hyp = model.greedy_decode(pair.src, params)
        else:
            hyp = model.beam_search(pair.src, params, beam_size)
        hyps.append(_ids(hyp.tokens))
    return bleu(hyps, [_ids(pair.tgt) for pair in dev_pairs])


def batch_loss(model, params, pairs):
    """Suma de −log p(y|x) sobre un lote fijo."""
    return -sum(model.log_prob(p.src, tuple(p.tgt) + (EOS,), params) for p in pairs)


def _check_pairs(pairs, name):
    pairs = list(pairs)
    if not pairs:
        raise CorpusError(f"el corpus de {name} está vacío")
    if any(not p.src or not p.tgt for p in pairs):
        raise CorpusError(f"el corpus de {name} no está codificado (use TextPipeline.encode_pairs)")
    return pairs


def train_offline(model_config, train_pairs, dev_pairs, config=None, init=None,
                  pipeline=None, on_evaluation=None):
    """
    Minimiza −log p(y|x) oración a oración y devuelve el Checkpoint con el
    mejor BLEU de desarrollo.

    - el ruido de pesos se aplica a una copia transitoria; el gradiente de esa
      copia se aplica a los parámetros reales
    - la paciencia se mide en actualizaciones desde la última mejora y solo
      se revisa tras cada evaluación (paciencia 0 → una única evaluación)
    - una pérdida no finita aborta y se devuelve el último estado finito
    - `init` continúa desde un checkpoint existente (ajuste fino)
    """
    config = config or TrainingConfig.from_settings()
    train_pairs = _check_pairs(train_pairs, 'entrenamiento')
    dev_pairs = _check_pairs(dev_pairs, 'desarrollo')

    if init is not None:
        model_config = init.config
        params = init.params.copy()
    else:
        params = ParameterSet.initialize(model_config, seed=model_config.seed)
    model = AttentionalModel(model_config)
    state = config.new_state()
    rng = np.random.default_rng(config.seed)
    sigma = model_config.weight_noise_sigma

    best_params, best_bleu, best_update = params.copy(), None, 0
    evaluations, updates, diverged = [], 0, False
    order = []

    while updates < config.max_updates:
        if not order:
            order = list(rng.permutation(len(train_pairs)))
        pair = train_pairs[order.pop()]
        noisy = apply_weight_noise(params, sigma, rng) if sigma > 0 else params
        loss, grads = model.nll_and_gradients(pair.src, tuple(pair.tgt) + (EOS,), noisy)
        if not np.isfinite(loss) or not all(np.all(np.isfinite(g)) for g in grads.values()):
            logger.warning("pérdida no finita en la actualización %d; se aborta el entrenamiento", updates + 1)
            diverged = True
            break
        if config.clip_norm is not None:
            grads, _ = clip_global_norm(grads, config.clip_norm)
        previous = params.copy()
        gradient_update(params, grads, state)
        if not params.is_finite():
            logger.warning("parámetros no finitos en la actualización %d; se aborta el entrenamiento", updates + 1)
            params.assign(previous)
            diverged = True
            break
        updates += 1

        if updates % config.eval_every == 0 or updates == config.max_updates:
            score = dev_bleu(model, params, dev_pairs, config.dev_beam_size)
            evaluations.append({'updates': updates, 'dev_bleu': score})
            if best_bleu is None or score > best_bleu:
                best_params, best_bleu, best_update = params.copy(), score, updates
            logger.info("actualización %d: BLEU dev %.2f (mejor %.2f en %d)",
                        updates, score, best_bleu, best_update)
            if on_evaluation is not None:
                on_evaluation(updates, score)
            if updates - best_update >= config.patience:
                logger.info("parada temprana: sin mejora en %d actualizaciones", updates - best_update)
                break

    if best_bleu is None:
        # Sin evaluaciones: se conserva el último estado finito
        best_params = params.copy()
        best_update = updates
    meta = {
        'updates': updates,
        'best_update': best_update,
        'dev_bleu': best_bleu,
        'evaluations': evaluations,
        'diverged': diverged,
        'training': config.to_dict(),
    }
    return Checkpoint(
        config=model_config,
        params=best_params,
        src_vocab=pipeline.src_vocab if pipeline else (init.src_vocab if init else None),
        tgt_vocab=pipeline.tgt_vocab if pipeline else (init.tgt_vocab if init else None),
        merges=pipeline.merges if pipeline else (init.merges if init else None),
        meta=meta,
    )
