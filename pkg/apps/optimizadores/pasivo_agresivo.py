"""
Actualizaciones pasivo-agresivas resueltas por subgradiente.

Para una oración con hipótesis h y referencia y, la pérdida es
ℓ(Θ) = log p(h|x) − log p(y|x). PAS minimiza
F(Θ) = ½‖Θ − Θ_t‖² + C·max(0, ℓ(Θ)); PPAS itera sobre max(0, ℓ) y proyecta
el desplazamiento final a norma C.

El núcleo trabaja sobre vectores planos float64 y una función
loss_and_grad(θ) → (ℓ, ∇ℓ), así que sirve igual para el modelo completo y para
funciones sintéticas de prueba.
"""

import logging
from dataclasses import dataclass

import numpy as np

from apps.autodiff.graph import Graph
from apps.autodiff.utils import clip_vector
from config.exceptions import ConfigurationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PAConfig:
    lr: float
    C: float
    k_max: int = 10
    clip_norm: float = 1.0
    true_projection: bool = False

    def __post_init__(self):
        if self.lr <= 0 or self.C <= 0 or self.k_max < 1:
            raise ConfigurationError(
                f"configuración PA inválida: lr={self.lr}, C={self.C}, k_max={self.k_max} "
                "(se requiere lr > 0, C > 0, k_max >= 1)"
            )


@dataclass
class PAResult:
    theta: np.ndarray
    status: str
    initial_loss: float
    final_loss: float
    iterations: int
    displacement_norm: float


def _finite(loss, grad):
    return np.isfinite(loss) and np.all(np.isfinite(grad))


def pa_loss_and_gradient(model, params, src, ref_tokens, hyp_tokens):
    """ℓ = log p(hyp|src) − log p(ref|src) y su gradiente plano (float64)."""
    if tuple(hyp_tokens) == tuple(ref_tokens):
        return 0.0, np.zeros(params.size)
    graph = Graph()
    loss = graph.sub(model.sentence_log_prob(src, list(hyp_tokens), params, graph),
                     model.sentence_log_prob(src, list(ref_tokens), params, graph))
    graph.backward(loss)
    return loss.item(), params.flat_gradients()


def pa_loss(model, params, src, ref_tokens, hyp_tokens):
    """Valor de ℓ; positivo cuando la hipótesis es más probable que la referencia."""
    if tuple(hyp_tokens) == tuple(ref_tokens):
        return 0.0
    return model.log_prob(src, list(hyp_tokens), params) - model.log_prob(src, list(ref_tokens), params)


def minimize_pa(theta_t, loss_and_grad, cfg, projected=False):
    """
    Bucle interno de PAS (projected=False) o PPAS (projected=True).

    Se detiene cuando ℓ ≤ 0 o tras k_max iteraciones. Si ℓ(θ_t) ≤ 0 devuelve
    θ_t sin copiar (pasivo). Un valor no finito aborta y devuelve θ_t con
    status 'skipped'.
    """
    theta_t = np.asarray(theta_t, dtype=np.float64)
    loss, grad = loss_and_grad(theta_t)
    if not _finite(loss, grad):
        logger.warning("pérdida o gradiente no finito en θ_t; actualización omitida")
        return PAResult(theta_t, 'skipped', float(loss), float(loss), 0, 0.0)
    if loss <= 0:
        return PAResult(theta_t, 'passive', float(loss), float(loss), 0, 0.0)

    initial_loss = float(loss)
    if projected:
        theta, iterations = _ppas_iterations(theta_t, loss, grad, loss_and_grad, cfg)
    else:
        theta, iterations = _pas_iterations(theta_t, loss, grad, loss_and_grad, cfg)
    if theta is None:
        logger.warning("valor no finito en el bucle interno; actualización omitida")
        return PAResult(theta_t, 'skipped', initial_loss, initial_loss, iterations, 0.0)

    displacement = theta - theta_t
    norm = float(np.linalg.norm(displacement))
    if projected:
        if norm == 0.0:
            return PAResult(theta_t, 'passive', initial_loss, initial_loss, iterations, 0.0)
        if not (cfg.true_projection and norm <= cfg.C):
            theta = theta_t + displacement * (cfg.C / norm)
            norm = float(np.linalg.norm(theta - theta_t))
    final_loss, _ = loss_and_grad(theta)
    return PAResult(theta, 'applied', initial_loss, float(final_loss), iterations, norm)


def _objective(theta, theta_t, loss, C):
    diff = theta - theta_t
    return 0.5 * float(diff @ diff) + C * max(0.0, loss)


def _pas_iterations(theta_t, loss, grad, loss_and_grad, cfg):
    """Θ^{k+1} = Θ^k − ρ·((Θ^k − Θ_t) + C·[ℓ>0]·∇ℓ), con salvaguarda sobre F."""
    lr, halved = cfg.lr, False
    theta = theta_t
    current = _objective(theta, theta_t, loss, cfg.C)
    best_theta, best_value = theta_t, current
    k = 0
    while k < cfg.k_max and loss > 0:
        clipped, _ = clip_vector(grad, cfg.clip_norm)
        step = (theta - theta_t) + cfg.C * clipped
        candidate = theta - lr * step
        cand_loss, cand_grad = loss_and_grad(candidate)
        if not _finite(cand_loss, cand_grad):
            return None, k + 1
        value = _objective(candidate, theta_t, cand_loss, cfg.C)
        if value > current and not halved:
            # Paso demasiado largo: se reintenta una vez con la mitad de ρ
            lr, halved = lr * 0.5, True
            logger.debug("F aumentó (%.6g > %.6g); ρ reducido a %g", value, current, lr)
            continue
        theta, loss, grad, current = candidate, cand_loss, cand_grad, value
        if value < best_value:
            best_theta, best_value = candidate, value
        k += 1
    return best_theta, k


def _ppas_iterations(theta_t, loss, grad, loss_and_grad, cfg):
    """Θ̄^{k+1} = Θ^k − ρ·[ℓ>0]·∇ℓ hasta ℓ ≤ 0 o k_max."""
    theta = theta_t
    k = 0
    while k < cfg.k_max and loss > 0:
        clipped, _ = clip_vector(grad, cfg.clip_norm)
        theta = theta - cfg.lr * clipped
        loss, grad = loss_and_grad(theta)
        if not _finite(loss, grad):
            return None, k + 1
        k += 1
    return theta, k


def _as_tokens(hyp):
    return tuple(hyp.tokens) if hasattr(hyp, 'tokens') else tuple(hyp)


def pa_update(model, params, src, ref_tokens, hyp, cfg, projected):
    """
    Aplica PAS o PPAS sobre la ParameterSet. Los parámetros solo se escriben si
    el resultado es 'applied'; en otro caso quedan idénticos bit a bit.
    """
    hyp_tokens = _as_tokens(hyp)
    work = params.copy()

    def loss_and_grad(theta):
        work.assign_flat(theta)
        work.zero_grad()
        return pa_loss_and_gradient(model, work, src, ref_tokens, hyp_tokens)

    result = minimize_pa(params.flat(), loss_and_grad, cfg, projected=projected)
    if result.status == 'applied':
        params.assign_flat(result.theta)
    logger.debug("%s: %s (ℓ=%.4g, iteraciones=%d, ‖Δ‖=%.4g)", 'PPAS' if projected else 'PAS',
                 result.status, result.initial_loss, result.iterations, result.displacement_norm)
    return result


def pas_update(model, params, src, ref_tokens, hyp, cfg):
    return pa_update(model, params, src, ref_tokens, hyp, cfg, projected=False)


def ppas_update(model, params, src, ref_tokens, hyp, cfg):
    return pa_update(model, params, src, ref_tokens, hyp, cfg, projected=True)
