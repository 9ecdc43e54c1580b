import heapq
from dataclasses import dataclass

import numpy as np

from apps.autodiff.graph import Graph
from apps.corpus.vocabulary import BOS, EOS
from .model import NON_EXPANDABLE


@dataclass(frozen=True)
class Hypothesis:
    """
    Salida de la búsqueda: tokens (terminados en </s>) y su log-probabilidad.
    `truncated` indica que el </s> se forzó al llegar a max_output_length.
    """
    tokens: tuple
    log_prob: float
    truncated: bool = False


@dataclass
class _Entry:
    tokens: tuple
    log_prob: float
    state: object = None

    @property
    def finished(self):
        return bool(self.tokens) and self.tokens[-1] == EOS


def beam_search(model, src, params, beam_size, max_output_length):
    """
    Búsqueda en haz anidada, puntuación = suma de log-probabilidades (sin
    normalización por longitud).

    A diferencia del haz clásico, que guarda los k mejores hijos de todo el
    haz, aquí la posición j se elige entre los hijos de las posiciones 0..j
    del paso anterior. Las posiciones 0..k-2 del haz de ancho k coinciden
    entonces con el haz de ancho k-1: con ancho 1 es la decodificación voraz
    y con un ancho que cubre todos los candidatos la búsqueda es exhaustiva.

    En el paso max_output_length solo se puede emitir </s>, así que toda
    hipótesis devuelta está completa y las terminadas del haz estrecho son un
    subconjunto de las del ancho. Por eso la puntuación no baja al ensanchar
    el haz. Las hipótesis cuyo </s> fue forzado se marcan como truncadas.
    """
    if beam_size < 1:
        raise ValueError(f"beam_size debe ser >= 1, se recibió {beam_size}")
    if max_output_length < 1:
        raise ValueError(f"max_output_length debe ser >= 1, se recibió {max_output_length}")
    graph = Graph(record=False)
    annotations = model.encode(src, params, graph)
    keys = model.attention_keys(annotations, params, graph)
    start = model.initial_state(annotations, params, graph)
    expandable = [t for t in range(model.config.tgt_vocab_size) if t not in NON_EXPANDABLE]

    previous = [_Entry((), 0.0, start)]
    finished = []
    for step in range(max_output_length):
        last = step == max_output_length - 1
        candidates = (EOS,) if last else expandable
        pool, current = [], []
        for position in range(beam_size):
            parent = previous[position] if position < len(previous) else None
            if parent is not None and not parent.finished:
                prev = parent.tokens[-1] if parent.tokens else BOS
                context, _ = model.attend(annotations, parent.state, params, graph, keys=keys)
                state, logits = model.step_logits(prev, parent.state, context, params, graph)
                log_probs = graph.log_softmax(logits).values.astype(np.float64)
                for token in candidates:
                    gain = float(log_probs[token])
                    # Empates: paso más probable, luego índice de token menor
                    heapq.heappush(pool, (-(parent.log_prob + gain), -gain, token, position, state))
            if not pool:
                current.append(None)
                continue
            neg_score, _, token, origin, state = heapq.heappop(pool)
            entry = _Entry(previous[origin].tokens + (token,), -neg_score, state)
            current.append(entry)
            if entry.finished:
                finished.append(Hypothesis(entry.tokens, entry.log_prob, truncated=last))
        previous = current

        live = [e for e in current if e is not None and not e.finished]
        if not live:
            break
        # Las puntuaciones solo bajan: nada vivo puede superar a la mejor terminada
        if finished and max(h.log_prob for h in finished) >= max(e.log_prob for e in live):
            break

    return max(finished, key=lambda h: h.log_prob)
