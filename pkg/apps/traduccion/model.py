"""
Modelo de traducción encoder-decoder con atención.

embeddings → LSTM bidireccional (anotaciones) → atención aditiva → decoder LSTM
con capa de salida profunda → distribución sobre el vocabulario destino.
"""

from dataclasses import dataclass

import numpy as np

from apps.autodiff.graph import Graph
from apps.autodiff.tensor import Tensor
from apps.corpus.vocabulary import BOS, EOS, PAD
from config.exceptions import VocabularyError

# Tokens que la búsqueda nunca genera
NON_EXPANDABLE = (PAD, BOS)


@dataclass
class DecoderState:
    h: Tensor
    c: Tensor


class AttentionalModel:
    """
    Operaciones del modelo sobre una ParameterSet externa. La instancia solo
    guarda la configuración, así que varios hilos pueden traducir con copias
    distintas de los parámetros.
    """

    def __init__(self, config):
        self.config = config

    # --- Validación ---

    def _check_source(self, src):
        if len(src) == 0:
            raise VocabularyError(-1, self.config.src_vocab_size, message="la secuencia fuente está vacía")
        for token in src:
            if not 0 <= token < self.config.src_vocab_size:
                raise VocabularyError(token, self.config.src_vocab_size, side='source')

    def _check_target_token(self, token):
        if not 0 <= token < self.config.tgt_vocab_size:
            raise VocabularyError(token, self.config.tgt_vocab_size, side='target')

    def _zeros(self, *shape):
        return Tensor(np.zeros(shape, dtype=self.config.dtype))

    # --- Bloques ---

    def _lstm(self, graph, x, state, W, b):
        H = self.config.hidden_dim
        z = graph.add(graph.matmul(graph.concat([x, state.h]), W), b)
        i = graph.sigmoid(graph.slice(z, 0, H))
        f = graph.sigmoid(graph.slice(z, H, 2 * H))
        o = graph.sigmoid(graph.slice(z, 2 * H, 3 * H))
        g = graph.tanh(graph.slice(z, 3 * H, 4 * H))
        c = graph.add(graph.mul(f, state.c), graph.mul(i, g))
        h = graph.mul(o, graph.tanh(c))
        return DecoderState(h, c)

    def encode(self, src, params, graph=None):
        """Una anotación [fw; bw] de dimensión 2·hidden_dim por token fuente."""
        graph = graph or Graph(record=False)
        self._check_source(src)
        H = self.config.hidden_dim
        embeddings = [graph.embedding_lookup(params['src_emb'], token) for token in src]

        forward, state = [], DecoderState(self._zeros(H), self._zeros(H))
        for x in embeddings:
            state = self._lstm(graph, x, state, params['enc_fw_W'], params['enc_fw_b'])
            forward.append(state.h)

        backward, state = [], DecoderState(self._zeros(H), self._zeros(H))
        for x in reversed(embeddings):
            state = self._lstm(graph, x, state, params['enc_bw_W'], params['enc_bw_b'])
            backward.append(state.h)
        backward.reverse()

        return graph.stack([graph.concat([fw, bw]) for fw, bw in zip(forward, backward)])

    def initial_state(self, annotations, params, graph=None):
        """h₀ = tanh(media(anotaciones)·W_init + b_init), c₀ = 0."""
        graph = graph or Graph(record=False)
        n = annotations.shape[0]
        mean = graph.matmul(Tensor(np.full(n, 1.0 / n, dtype=self.config.dtype)), annotations)
        h = graph.tanh(graph.add(graph.matmul(mean, params['dec_init_W']), params['dec_init_b']))
        return DecoderState(h, self._zeros(self.config.hidden_dim))

    def attention_keys(self, annotations, params, graph=None):
        """Proyección U·a_i de las anotaciones; se reutiliza en todos los pasos."""
        graph = graph or Graph(record=False)
        return graph.matmul(annotations, params['att_U'])

    def attend(self, annotations, decoder_state, params, graph=None, keys=None):
        """
        Atención aditiva: e_i = v·tanh(U a_i + W s + b), α = softmax(e),
        contexto = Σ α_i a_i. Devuelve (contexto, pesos).
        """
        graph = graph or Graph(record=False)
        if keys is None:
            keys = self.attention_keys(annotations, params, graph)
        h = decoder_state.h if isinstance(decoder_state, DecoderState) else decoder_state
        query = graph.add(graph.matmul(h, params['att_W']), params['att_b'])
        scores = graph.matmul(graph.tanh(graph.add(keys, query)), params['att_v'])
        weights = graph.softmax(scores)
        return graph.matmul(weights, annotations), weights

    def step_logits(self, prev_token, prev_state, context, params, graph=None):
        graph = graph or Graph(record=False)
        self._check_target_token(prev_token)
        embedding = graph.embedding_lookup(params['tgt_emb'], prev_token)
        state = self._lstm(graph, graph.concat([embedding, context]), prev_state, params['dec_W'], params['dec_b'])
        # Capa de salida profunda: decoder, palabra previa y contexto
        deep = graph.add(graph.matmul(state.h, params['out_Ws']), graph.matmul(embedding, params['out_Wy']))
        deep = graph.add(deep, graph.matmul(context, params['out_Wc']))
        deep = graph.tanh(graph.add(deep, params['out_b']))
        logits = graph.add(graph.matmul(deep, params['readout_W']), params['readout_b'])
        return state, logits

    def decode_step(self, prev_token, prev_state, context, params, graph=None):
        """Devuelve (estado siguiente, distribución sobre el vocabulario destino)."""
        graph = graph or Graph(record=False)
        state, logits = self.step_logits(prev_token, prev_state, context, params, graph)
        return state, graph.softmax(logits)

    # --- Puntuación forzada ---

    def sentence_log_prob(self, src, tgt, params, graph=None):
        """
        Σ_i log p(tgt_i | tgt_<i, src; Θ) como tensor escalar diferenciable.

        `tgt` se puntúa tal cual (el llamador añade </s> si corresponde).
        """
        graph = graph or Graph()
        if len(tgt) == 0:
            raise VocabularyError(-1, self.config.tgt_vocab_size, message="la secuencia destino está vacía")
        for token in tgt:
            self._check_target_token(token)
        annotations = self.encode(src, params, graph)
        keys = self.attention_keys(annotations, params, graph)
        state = self.initial_state(annotations, params, graph)
        prev, total = BOS, None
        for token in tgt:
            context, _ = self.attend(annotations, state, params, graph, keys=keys)
            state, logits = self.step_logits(prev, state, context, params, graph)
            nll = graph.cross_entropy(logits, token)
            total = nll if total is None else graph.add(total, nll)
            prev = token
        return graph.scale(total, -1.0)

    def log_prob(self, src, tgt, params):
        """Valor real de sentence_log_prob, sin grafo de gradiente."""
        return self.sentence_log_prob(src, tgt, params, Graph(record=False)).item()

    def nll_and_gradients(self, src, tgt, params):
        """-log p(tgt|src) y sus gradientes {nombre: arreglo}."""
        graph = Graph()
        loss = graph.scale(self.sentence_log_prob(src, tgt, params, graph), -1.0)
        graph.backward(loss)
        return loss.item(), params.gradients()

    # --- Decodificación ---

    def greedy_decode(self, src, params, max_output_length=None):
        from .beam import Hypothesis

        max_len = max_output_length or self.config.max_output_length
        graph = Graph(record=False)
        annotations = self.encode(src, params, graph)
        keys = self.attention_keys(annotations, params, graph)
        state = self.initial_state(annotations, params, graph)
        prev, tokens, score = BOS, [], 0.0
        for step in range(max_len):
            context, _ = self.attend(annotations, state, params, graph, keys=keys)
            state, logits = self.step_logits(prev, state, context, params, graph)
            log_probs = graph.log_softmax(logits).values.astype(np.float64)
            log_probs[list(NON_EXPANDABLE)] = -np.inf
            if step == max_len - 1:
                # Último paso: solo </s>
                log_probs[np.arange(log_probs.size) != EOS] = -np.inf
            prev = int(np.argmax(log_probs))
            tokens.append(prev)
            score += float(log_probs[prev])
            if prev == EOS:
                return Hypothesis(tuple(tokens), score, truncated=step == max_len - 1)

    def beam_search(self, src, params, beam_size=None, max_output_length=None):
        from .beam import beam_search

        return beam_search(self, src, params,
                           beam_size or self.config.beam_size,
                           max_output_length or self.config.max_output_length)
