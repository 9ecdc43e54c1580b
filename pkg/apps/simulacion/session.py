"""
Simulación de post-edición en línea.

Para cada oración: traducir con Θ_t, guardar la hipótesis, tomar la
referencia como post-edición, actualizar y avanzar. Cada par se usa una
sola vez y el conjunto de desarrollo nunca se consulta.
"""

import logging
import time

import numpy as np

from apps.optimizadores.learner import OnlineLearner
from apps.reportes import bleu as bleu_metric
from apps.reportes import ter as ter_metric
from apps.subpalabras.tokenizer import detokenize, tokenize
from apps.traduccion.model import AttentionalModel
from config.exceptions import ConfigurationError
from .trace import SimulationTrace, TraceRecord, TraceWriter

logger = logging.getLogger(__name__)


def reference_text(pair):
    """Referencia tal como se evalúa: tokenizada y unida por espacios."""
    return detokenize(tokenize(pair.tgt_text))


class OnlineSession:

    def __init__(self, model, params, learner, pipeline, beam_size=None, max_output_length=None,
                 name=None, writer=None, log_every=100):
        self.model = model
        self.params = params
        self.learner = learner
        self.pipeline = pipeline
        self.beam_size = beam_size or model.config.beam_size
        self.max_output_length = max_output_length or model.config.max_output_length
        self.trace = SimulationTrace(name or learner.spec.name, learner.spec.name)
        self.writer = writer
        self.log_every = log_every
        self._bleu = np.zeros(bleu_metric.STATS_WIDTH, dtype=np.int64)
        self._ter = np.zeros(2)
        self._counts = {}

    def translate(self, pair):
        return self.model.beam_search(pair.src, self.params, self.beam_size, self.max_output_length)

    def step(self, pair):
        hyp = self.translate(pair)
        hyp_text = self.pipeline.decode_target(hyp.tokens)
        ref_text = reference_text(pair)

        started = time.perf_counter()
        result = self.learner.update(self.model, self.params, pair.src, pair.tgt, hyp)
        elapsed_ms = (time.perf_counter() - started) * 1000.0

        self._bleu += bleu_metric.sentence_stats(hyp_text, ref_text)
        self._ter += ter_metric.sentence_stats(hyp_text, ref_text)
        record = TraceRecord(
            index=len(self.trace) + 1,
            src=pair.src_text,
            hyp=hyp_text,
            hyp_log_prob=float(hyp.log_prob),
            ref=ref_text,
            cum_bleu=bleu_metric.bleu_from_stats(self._bleu, smooth=True),
            cum_ter=ter_metric.ter_from_stats(self._ter),
            status=result.status,
            loss=float(result.loss),
            inner_iterations=int(result.inner_iterations),
            update_ms=elapsed_ms,
            truncated=hyp.truncated,
        )
        self.trace.records.append(record)
        self._counts[result.status] = self._counts.get(result.status, 0) + 1
        if self.writer is not None:
            self.writer.append(record)
        if self.log_every and record.index % self.log_every == 0:
            logger.info("%s: oración %d, BLEU acumulado %.2f, TER acumulado %.2f",
                        self.trace.name, record.index, record.cum_bleu, record.cum_ter)
        return record

    def run(self, pairs):
        for pair in pairs:
            self.step(pair)
        last = self.trace.records[-1] if self.trace.records else None
        if last is not None:
            logger.info("%s: %d oraciones, BLEU %.2f, TER %.2f, estados %s", self.trace.name,
                        len(self.trace), last.cum_bleu, last.cum_ter, self._counts)
        return self.trace


def run_online_session(checkpoint, test_pairs, spec, pipeline, trace_path=None, beam_size=None,
                       name=None, log_every=100):
    """
    Sesión completa sobre una copia de los parámetros del checkpoint (el
    checkpoint no se modifica). Con `trace_path` la traza se escribe línea a
    línea mientras avanza.
    """
    test_pairs = list(test_pairs)
    if not test_pairs:
        raise ConfigurationError("el conjunto de prueba está vacío")
    model = AttentionalModel(checkpoint.config)
    session = OnlineSession(model, checkpoint.params.copy(), OnlineLearner(spec), pipeline,
                            beam_size=beam_size, name=name, log_every=log_every)
    if trace_path is None:
        return session.run(test_pairs)
    with TraceWriter(trace_path, session.trace) as writer:
        session.writer = writer
        return session.run(test_pairs)


def translate_corpus(checkpoint, pairs, pipeline, beam_size=None):
    """Traducción por lotes con parámetros congelados: (textos, hipótesis)."""
    model = AttentionalModel(checkpoint.config)
    hyps = [model.beam_search(p.src, checkpoint.params, beam_size) for p in pairs]
    return [pipeline.decode_target(h.tokens) for h in hyps], hyps
