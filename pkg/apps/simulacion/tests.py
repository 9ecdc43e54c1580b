import os
import tempfile
import unittest
from dataclasses import replace
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from apps.corpus.pipeline import TextPipeline
from apps.corpus.toy import generate_toy_task
from apps.optimizadores.learner import OnlineLearner, OptimizerSpec
from apps.reportes import bleu as bleu_metric
from apps.reportes import ter as ter_metric
from apps.reportes.bootstrap import cumulative_curve
from apps.traduccion.checkpoint import Checkpoint
from apps.traduccion.configuracion import ModelConfig
from apps.traduccion.model import AttentionalModel
from apps.traduccion.parameters import ParameterSet
from config.exceptions import ConfigurationError, CorpusError, MetricError
from .resultados import (adaptation_margin, emit_trajectory_plot_data, measure_update_time, tail_bleu_gain,
                         write_plot_data)
from .scenarios import BASELINE_NAME, ScenarioSpec, run_scenario, scenario_report
from .session import OnlineSession, reference_text, run_online_session, translate_corpus
from .trace import SimulationTrace, TraceRecord, load_trace
from .training import TrainingConfig, batch_loss, dev_bleu, train_offline

SLOW_TESTS = os.environ.get('OLNMT_SLOW_TESTS') == '1'

TINY_MODEL = dict(embedding_dim=8, hidden_dim=8, attention_dim=8, deep_output_dim=8,
                  beam_size=2, max_output_length=6, weight_noise_sigma=0.0, dtype='float64')


def _setup(kind='copy', n_train=20, n_test=6, seed=0, **model):
    task = generate_toy_task(kind, n_train, n_test, vocab_size=5, max_len=3, seed=seed)
    pipeline = TextPipeline.build(task.ood_train, 100)
    config = ModelConfig(src_vocab_size=len(pipeline.src_vocab), tgt_vocab_size=len(pipeline.tgt_vocab),
                         seed=seed, **dict(TINY_MODEL, **model))
    return task, pipeline, config


def _checkpoint(config, pipeline, seed=0, init_scale=None):
    if init_scale is not None:
        config = ModelConfig.from_dict(dict(config.to_dict(), init_scale=init_scale))
    return Checkpoint(config, ParameterSet.initialize(config, seed=seed), pipeline.src_vocab, pipeline.tgt_vocab)


def _record(index, ref='a b', hyp='a b', cum_bleu=0.0, update_ms=0.0):
    return TraceRecord(index=index, src='x', hyp=hyp, hyp_log_prob=-1.0, ref=ref, cum_bleu=cum_bleu,
                       cum_ter=0.0, status='applied', update_ms=update_ms)


class _TempDirMixin:

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()


class TrainingConfigTests(SimpleTestCase):

    def test_valores_por_defecto(self):
        config = TrainingConfig.from_settings()
        self.assertEqual(config.optimizer, 'adadelta')
        self.assertEqual(config.lr, 1.0)
        self.assertEqual(config.eval_every, 1000)
        self.assertEqual(config.patience, 10000)
        self.assertEqual(config.clip_norm, 1.0)

    def test_optimizador_offline_invalido(self):
        with self.assertRaises(ConfigurationError):
            TrainingConfig(optimizer='pas')

    def test_paciencia_negativa(self):
        with self.assertRaises(ConfigurationError):
            TrainingConfig(patience=-1)


class TrainOfflineTests(SimpleTestCase):

    def setUp(self):
        self.task, self.pipeline, self.config = _setup()
        self.train = self.pipeline.encode_pairs(self.task.ood_train)
        self.dev = self.pipeline.encode_pairs(self.task.ood_dev)

    def test_paciencia_cero_una_evaluacion(self):
        config = TrainingConfig(eval_every=5, patience=0, max_updates=100)
        checkpoint = train_offline(self.config, self.train, self.dev, config, pipeline=self.pipeline)
        self.assertEqual(len(checkpoint.meta['evaluations']), 1)
        self.assertEqual(checkpoint.meta['updates'], 5)

    def test_devuelve_el_mejor_checkpoint(self):
        config = TrainingConfig(eval_every=5, patience=1000, max_updates=30)
        checkpoint = train_offline(self.config, self.train, self.dev, config, pipeline=self.pipeline)
        scores = [e['dev_bleu'] for e in checkpoint.meta['evaluations']]
        self.assertEqual(len(scores), 6)
        self.assertEqual(checkpoint.meta['dev_bleu'], max(scores))
        model = AttentionalModel(checkpoint.config)
        self.assertAlmostEqual(dev_bleu(model, checkpoint.params, self.dev), max(scores))
        self.assertEqual(checkpoint.tgt_vocab, self.pipeline.tgt_vocab)

    def test_perdida_del_lote_baja_en_cien_actualizaciones(self):
        improved = 0
        for seed in range(20):
            task, pipeline, config = _setup(seed=seed)
            train = pipeline.encode_pairs(task.ood_train)
            batch = train[:5]
            model = AttentionalModel(config)
            before = batch_loss(model, ParameterSet.initialize(config, seed=config.seed), batch)
            training = TrainingConfig(eval_every=1000, patience=1000, max_updates=100, seed=seed)
            checkpoint = train_offline(config, train, pipeline.encode_pairs(task.ood_dev), training)
            improved += batch_loss(model, checkpoint.params, batch) < before
        self.assertGreaterEqual(improved, 19)

    def test_continua_desde_un_checkpoint(self):
        init = _checkpoint(self.config, self.pipeline, seed=3)
        config = TrainingConfig(eval_every=2, patience=0, max_updates=2)
        checkpoint = train_offline(None, self.train, self.dev, config, init=init)
        self.assertEqual(checkpoint.config, init.config)
        self.assertFalse(checkpoint.params.equals(init.params))
        self.assertEqual(checkpoint.src_vocab, self.pipeline.src_vocab)

    def test_divergencia_aborta(self):
        init = _checkpoint(self.config, self.pipeline)
        init.params['readout_b'].values[...] = np.nan
        checkpoint = train_offline(None, self.train, self.dev, TrainingConfig(eval_every=1, max_updates=10), init=init)
        self.assertTrue(checkpoint.meta['diverged'])
        self.assertEqual(checkpoint.meta['updates'], 0)

    def test_corpus_vacio(self):
        with self.assertRaises(CorpusError):
            train_offline(self.config, [], self.dev)

    def test_corpus_sin_codificar(self):
        with self.assertRaises(CorpusError):
            train_offline(self.config, self.task.ood_train, self.dev)


class OnlineSessionTests(_TempDirMixin, SimpleTestCase):

    def setUp(self):
        super().setUp()
        self.task, self.pipeline, self.config = _setup(n_test=8)
        self.checkpoint = _checkpoint(self.config, self.pipeline, init_scale=0.5)
        self.test = self.pipeline.encode_pairs(self.task.test)
        self.sgd = OptimizerSpec.from_settings('sgd', lr=0.5)

    def test_longitud_de_la_traza(self):
        trace = run_online_session(self.checkpoint, self.test, self.sgd, self.pipeline)
        self.assertEqual(len(trace), len(self.test))
        self.assertEqual([r.index for r in trace.records], list(range(1, len(self.test) + 1)))

    def test_linea_base_igual_a_traduccion_por_lotes(self):
        trace = run_online_session(self.checkpoint, self.test, OptimizerSpec.from_settings('none'), self.pipeline)
        texts, hyps = translate_corpus(self.checkpoint, self.test, self.pipeline)
        self.assertEqual(trace.hypotheses, texts)
        self.assertEqual([r.hyp_log_prob for r in trace.records], [h.log_prob for h in hyps])
        self.assertTrue(all(r.status == 'frozen' for r in trace.records))

    def test_hipotesis_antes_de_actualizar(self):
        model = AttentionalModel(self.config)
        session = OnlineSession(model, self.checkpoint.params.copy(), OnlineLearner(self.sgd), self.pipeline)
        changed = 0
        for pair in self.test:
            before = session.params.copy()
            hyp = session.translate(pair)
            record = session.step(pair)
            self.assertEqual(record.hyp_log_prob, hyp.log_prob)
            self.assertAlmostEqual(model.log_prob(pair.src, hyp.tokens, before), record.hyp_log_prob, delta=1e-5)
            changed += not session.params.equals(before)
        self.assertGreater(changed, 0)

    def test_una_actualizacion_por_par(self):
        learner = OnlineLearner(self.sgd)
        calls = []
        original = learner.update

        def counting(*args):
            calls.append(args[2])
            return original(*args)

        learner.update = counting
        session = OnlineSession(AttentionalModel(self.config), self.checkpoint.params.copy(), learner, self.pipeline)
        session.run(self.test)
        self.assertEqual(calls, [p.src for p in self.test])

    def test_reproducible(self):
        first = run_online_session(self.checkpoint, self.test, self.sgd, self.pipeline)
        second = run_online_session(self.checkpoint, self.test, self.sgd, self.pipeline)
        key = lambda r: (r.hyp, r.hyp_log_prob, r.loss, r.status, r.cum_bleu, r.cum_ter)
        self.assertEqual([key(r) for r in first.records], [key(r) for r in second.records])

    def test_checkpoint_no_se_modifica(self):
        before = self.checkpoint.params.copy()
        run_online_session(self.checkpoint, self.test, self.sgd, self.pipeline)
        self.assertTrue(self.checkpoint.params.equals(before))

    def test_metricas_acumuladas_recalculables(self):
        trace = run_online_session(self.checkpoint, self.test, self.sgd, self.pipeline)
        bleu_curve = cumulative_curve(bleu_metric.corpus_stats(trace.hypotheses, trace.references))
        ter_curve = cumulative_curve(ter_metric.corpus_stats(trace.hypotheses, trace.references), metric='ter')
        np.testing.assert_allclose([r.cum_bleu for r in trace.records], bleu_curve, rtol=1e-12)
        np.testing.assert_allclose([r.cum_ter for r in trace.records], ter_curve, rtol=1e-12)

    def test_referencia_tokenizada(self):
        trace = run_online_session(self.checkpoint, self.test, self.sgd, self.pipeline)
        self.assertEqual(trace.references, [reference_text(p) for p in self.test])

    def test_traza_en_disco(self):
        path = self.dir / 'traces' / 'sgd.jsonl'
        trace = run_online_session(self.checkpoint, self.test, self.sgd, self.pipeline, trace_path=path)
        loaded = load_trace(path)
        self.assertEqual(loaded.name, 'sgd')
        self.assertEqual(loaded.records, trace.records)

    def test_prueba_vacia(self):
        with self.assertRaises(ConfigurationError):
            run_online_session(self.checkpoint, [], self.sgd, self.pipeline)


class LoadTraceTests(_TempDirMixin, SimpleTestCase):

    def test_sin_cabecera(self):
        path = self.dir / 't.jsonl'
        path.write_text('{"kind": "record", "index": 1}\n', encoding='utf-8')
        with self.assertRaises(CorpusError):
            load_trace(path)

    def test_linea_invalida(self):
        path = self.dir / 't.jsonl'
        path.write_text('{"kind": "header", "name": "a", "optimizer": "sgd"}\n{no json\n', encoding='utf-8')
        with self.assertRaises(CorpusError) as ctx:
            load_trace(path)
        self.assertIn(':2:', str(ctx.exception))


class UpdateTimeTests(SimpleTestCase):

    def test_resumen(self):
        trace = SimulationTrace('adam', 'adam', [_record(i, update_ms=t) for i, t in enumerate([1.0, 2.0, 3.0, 10.0], 1)])
        summary = measure_update_time(trace)
        self.assertEqual(summary.n, 4)
        self.assertEqual(summary.mean_ms, 4.0)
        self.assertLessEqual(summary.min_ms, summary.mean_ms)
        self.assertLessEqual(summary.mean_ms, summary.max_ms)
        self.assertEqual(summary.reference_ms, 65.0)
        self.assertIn('65 ms', summary.render())

    def test_tiempos_medidos_no_negativos(self):
        task, pipeline, config = _setup()
        checkpoint = _checkpoint(config, pipeline)
        trace = run_online_session(checkpoint, pipeline.encode_pairs(task.test), OptimizerSpec.from_settings('adam'),
                                   pipeline)
        self.assertTrue(all(r.update_ms >= 0 for r in trace.records))
        summary = measure_update_time(trace)
        self.assertTrue(summary.min_ms <= summary.mean_ms <= summary.max_ms)

    def test_traza_vacia(self):
        with self.assertRaises(MetricError):
            measure_update_time(SimulationTrace('x', 'sgd'))


class TrajectoryPlotDataTests(_TempDirMixin, SimpleTestCase):

    def setUp(self):
        super().setUp()
        self.baseline = SimulationTrace('offline', 'none', [_record(i, cum_bleu=10.0 * i) for i in range(1, 5)])

    def test_trazas_iguales_serie_nula(self):
        same = SimulationTrace('sgd', 'sgd', list(self.baseline.records))
        series = emit_trajectory_plot_data(self.baseline, [same])
        self.assertEqual(series['sgd'], [0.0] * 4)

    def test_longitud_y_valor_final(self):
        task, pipeline, config = _setup(n_test=8)
        checkpoint = _checkpoint(config, pipeline, init_scale=0.5)
        test = pipeline.encode_pairs(task.test)
        baseline = run_online_session(checkpoint, test, OptimizerSpec.from_settings('none'), pipeline)
        online = run_online_session(checkpoint, test, OptimizerSpec.from_settings('sgd', lr=0.5), pipeline)
        series = emit_trajectory_plot_data(baseline, [online])['sgd']
        self.assertEqual(len(series), len(test))
        final = (bleu_metric.bleu(online.hypotheses, online.references)
                 - bleu_metric.bleu(baseline.hypotheses, baseline.references))
        self.assertAlmostEqual(series[-1], final)
        self.assertAlmostEqual(series[-2], online.records[-2].cum_bleu - baseline.records[-2].cum_bleu)

    def test_punto_final_sin_suavizar(self):
        # Sin bigramas comunes: el BLEU suavizado es positivo, el de corpus es 0
        online = SimulationTrace('sgd', 'sgd', [_record(i, hyp='a x', cum_bleu=25.0) for i in range(1, 5)])
        series = emit_trajectory_plot_data(self.baseline, [online])['sgd']
        self.assertEqual(series[:3], [15.0, 5.0, -5.0])
        self.assertAlmostEqual(series[-1], -100.0)

    def test_conjuntos_de_prueba_distintos(self):
        other = SimulationTrace('sgd', 'sgd', [_record(i, ref='c d') for i in range(1, 5)])
        with self.assertRaises(MetricError):
            emit_trajectory_plot_data(self.baseline, [other])
        with self.assertRaises(MetricError):
            emit_trajectory_plot_data(self.baseline, [SimulationTrace('sgd', 'sgd', self.baseline.records[:2])])

    def test_sin_trazas_en_linea(self):
        with self.assertRaises(MetricError):
            emit_trajectory_plot_data(self.baseline, [])

    def test_tsv(self):
        path = write_plot_data(self.dir / 'plot.tsv', {'sgd': [0.0, 1.5], 'adam': [0.25, -1.0]})
        self.assertEqual(path.read_text(encoding='utf-8').splitlines(),
                         ['n\tsgd\tadam', '1\t0.000000\t0.250000', '2\t1.500000\t-1.000000'])


class AdaptationMarginTests(SimpleTestCase):

    def _trace(self, name, hyps):
        return SimulationTrace(name, name, [_record(i, hyp=h) for i, h in enumerate(hyps, start=1)])

    def test_ganancia_en_la_cola(self):
        baseline = self._trace('offline', ['a b', 'x y', 'x y'])
        online = self._trace('adam', ['x y', 'a b', 'a b'])
        self.assertAlmostEqual(tail_bleu_gain(baseline, online, tail=2), 100.0)
        self.assertAlmostEqual(tail_bleu_gain(baseline, baseline, tail=2), 0.0)

    def test_cola_mayor_que_la_traza_usa_todo(self):
        baseline = self._trace('offline', ['a b', 'x y'])
        online = self._trace('adam', ['a b', 'a b'])
        self.assertAlmostEqual(tail_bleu_gain(baseline, online, tail=250),
                               100.0 - bleu_metric.bleu(['a b', 'x y'], ['a b', 'a b']))

    def test_trazas_incompatibles(self):
        baseline = self._trace('offline', ['a b', 'a b'])
        with self.assertRaises(MetricError):
            tail_bleu_gain(baseline, self._trace('adam', ['a b']))
        with self.assertRaises(ValueError):
            tail_bleu_gain(baseline, baseline, tail=0)

    def test_margen_minimo_menos_desviacion(self):
        improvements = [4.0, 6.0, 5.0, 7.0, 8.0]
        self.assertAlmostEqual(adaptation_margin(improvements), 4.0 - np.std(improvements, ddof=1))
        self.assertAlmostEqual(adaptation_margin([3.0, 3.0]), 3.0)

    def test_margen_con_una_sola_corrida(self):
        with self.assertRaises(MetricError):
            adaptation_margin([5.0])

def _tiny_scenario(scenario, **extra):
    values = dict(
        scenario=scenario,
        toy_kind='copy', toy_train=20, toy_test=6, toy_vocab=5, toy_max_len=3,
        model_overrides=dict(TINY_MODEL),
        training=TrainingConfig(eval_every=10, patience=0, max_updates=10),
        bootstrap_samples=20,
    )
    values.update(extra)
    return ScenarioSpec(**values)


class ScenarioSpecTests(SimpleTestCase):

    def test_escenario_desconocido(self):
        with self.assertRaises(ConfigurationError):
            ScenarioSpec(scenario=4, toy_kind='copy')

    def test_escenario_uno_sin_datos_del_dominio(self):
        with self.assertRaises(ConfigurationError):
            ScenarioSpec(scenario=1, ood_train=('a', 'b'), in_train=('c', 'd'), test=('e', 'f'))

    def test_escenario_tres_sin_datos_externos(self):
        with self.assertRaises(ConfigurationError):
            ScenarioSpec(scenario=3, ood_train=('a', 'b'), in_train=('c', 'd'), test=('e', 'f'))

    def test_corpus_faltante(self):
        with self.assertRaises(ConfigurationError):
            ScenarioSpec(scenario=2, ood_train=('a', 'b'), test=('e', 'f'))
        with self.assertRaises(ConfigurationError):
            ScenarioSpec(scenario=1, ood_train=('a', 'b'))

    def test_juguete_y_rutas_no_se_combinan(self):
        with self.assertRaises(ConfigurationError):
            ScenarioSpec(scenario=1, toy_kind='copy', ood_train=('a', 'b'))

    def test_optimizadores_por_nombre(self):
        spec = ScenarioSpec(scenario=3, toy_kind='copy', optimizers=['adam', 'ppas'])
        self.assertEqual([o.name for o in spec.optimizers], ['adam', 'ppas'])
        self.assertEqual(spec.optimizers[1].C, 1e-2)


class RunScenarioTests(_TempDirMixin, SimpleTestCase):

    def test_escenario_tres_con_none_es_evaluacion_offline(self):
        result = run_scenario(_tiny_scenario(3, optimizers=['none']))
        self.assertEqual(result.traces['none'].hypotheses, result.baseline.hypotheses)
        self.assertEqual(result.reports[0].bleu, result.reports[1].bleu)
        self.assertEqual(result.effective_scenario, 3)

    def test_escenario_dos_sin_datos_del_dominio_degenera(self):
        with self.assertLogs('apps.simulacion.scenarios', level='WARNING'):
            result = run_scenario(_tiny_scenario(2, toy_in_train=0, optimizers=['sgd']))
        self.assertEqual(result.effective_scenario, 1)
        self.assertIn('ejecutado como escenario 1', scenario_report(result))

    def test_escenario_dos_entrena_dos_etapas(self):
        with self.assertLogs('apps.simulacion.scenarios', level='INFO') as logs:
            run_scenario(_tiny_scenario(2, optimizers=[]))
        stages = [line for line in logs.output if 'entrenamiento offline' in line]
        self.assertEqual(len(stages), 2)

    def test_salidas_en_disco(self):
        result = run_scenario(_tiny_scenario(1, optimizers=['sgd', 'pas']), out_dir=self.dir)
        for name in ('checkpoint.npz', 'report.txt', 'report.jsonl', 'update_times.json', 'plot_data.tsv',
                     f'traces/{BASELINE_NAME}.jsonl', 'traces/sgd.jsonl', 'traces/pas.jsonl'):
            self.assertTrue((self.dir / name).exists(), name)
        self.assertEqual(len(load_trace(self.dir / 'traces' / 'pas.jsonl')), 6)
        report = (self.dir / 'report.txt').read_text(encoding='utf-8')
        self.assertIn('Escenario 1', report)
        self.assertIn('referencia GPU 65 ms', report)
        self.assertIn(result.best, ('sgd', 'pas'))
        Checkpoint.load(self.dir / 'checkpoint.npz')

    def test_reproducible(self):
        first = run_scenario(_tiny_scenario(1, optimizers=['adam']), out_dir=self.dir / 'a')
        second = run_scenario(_tiny_scenario(1, optimizers=['adam']), out_dir=self.dir / 'b')
        self.assertEqual(first.traces['adam'].hypotheses, second.traces['adam'].hypotheses)
        for name in ('report.jsonl', 'plot_data.tsv'):
            self.assertEqual((self.dir / 'a' / name).read_bytes(), (self.dir / 'b' / name).read_bytes())


@unittest.skipUnless(SLOW_TESTS, "prueba de extremo a extremo; active OLNMT_SLOW_TESTS=1")
class EndToEndAdaptationTests(SimpleTestCase):
    """Tarea de sustitución con desplazamiento de dominio a escala de escritorio."""

    MODEL = dict(embedding_dim=32, hidden_dim=32, attention_dim=32, deep_output_dim=32,
                 beam_size=4, max_output_length=20, weight_noise_sigma=0.0)
    TRAINING = TrainingConfig(eval_every=1000, patience=3000, max_updates=20000)

    def _spec(self, scenario, **extra):
        values = dict(scenario=scenario, toy_kind='substitution-grammar', toy_train=5000, toy_test=1000,
                      toy_vocab=20, toy_max_len=8, domain_shift=0.5, model_overrides=self.MODEL,
                      training=self.TRAINING, bootstrap_samples=200)
        values.update(extra)
        return ScenarioSpec(**values)

    def _adam_gain(self, seed):
        result = run_scenario(self._spec(1, optimizers=['adam'], seed=seed,
                                         training=replace(self.TRAINING, seed=seed)))
        self.assertGreater(result.checkpoint.meta['dev_bleu'], 0.0, f"semilla {seed}")
        tail = slice(-250, None)
        self.assertGreater(bleu_metric.bleu(result.baseline.hypotheses[tail], result.baseline.references[tail]),
                           0.0, f"semilla {seed}")
        return tail_bleu_gain(result.baseline, result.traces['adam'], tail=250)

    def test_adam_supera_a_la_linea_base_al_final_del_flujo(self):
        # Umbral: mejora mínima de cinco corridas de referencia menos una desviación estándar
        reference = [self._adam_gain(seed) for seed in range(1, 6)]
        self.assertTrue(all(gain > 0 for gain in reference), reference)
        margin = adaptation_margin(reference)
        self.assertGreater(self._adam_gain(0), max(margin, 0.0), reference)

    def test_ajuste_fino_mejora_la_linea_base(self):
        first = run_scenario(self._spec(1, toy_in_train=1000))
        second = run_scenario(self._spec(2, toy_in_train=1000))
        self.assertGreater(second.reports[0].bleu, first.reports[0].bleu)

    def test_copia_mejora_bleu_de_desarrollo(self):
        task, pipeline, _ = _setup(n_train=2000, n_test=100)
        config = ModelConfig(src_vocab_size=len(pipeline.src_vocab), tgt_vocab_size=len(pipeline.tgt_vocab),
                             embedding_dim=32, hidden_dim=32, attention_dim=32, deep_output_dim=32,
                             weight_noise_sigma=0.0)
        dev = pipeline.encode_pairs(task.ood_dev)
        untrained = dev_bleu(AttentionalModel(config), ParameterSet.initialize(config, seed=config.seed), dev)
        checkpoint = train_offline(config, pipeline.encode_pairs(task.ood_train), dev,
                                   TrainingConfig(eval_every=500, patience=2000, max_updates=5000))
        self.assertGreater(checkpoint.meta['dev_bleu'], untrained)
