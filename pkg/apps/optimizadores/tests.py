import json
import math

import numpy as np
from django.test import SimpleTestCase

from apps.autodiff.gradcheck import numerical_gradient
from apps.corpus.pipeline import TextPipeline
from apps.corpus.toy import generate_toy_task
from apps.corpus.vocabulary import BOS, EOS
from apps.traduccion.configuracion import ModelConfig
from apps.traduccion.model import AttentionalModel
from apps.traduccion.parameters import ParameterSet
from config.exceptions import ConfigurationError, DimensionError
from .learner import OnlineLearner, OptimizerSpec, hyperparameter_grid
from .pasivo_agresivo import PAConfig, minimize_pa, pa_loss, pa_loss_and_gradient, pas_update, ppas_update
from .reglas import adadelta_update, adagrad_update, adam_update, gradient_update, sgd_update
from .state import OptimizerState


def _scalar(value=1.0):
    return ParameterSet({'w': np.array([value])}, dtype='float64')


def _grad(value):
    return {'w': np.array([value])}


def _linear(a, b):
    """ℓ(θ) = a·θ + b sobre un vector plano."""
    a = np.atleast_1d(np.asarray(a, dtype=np.float64))
    return lambda theta: (float(a @ theta + b), a.copy())


def _toy_model(seed=0, dtype='float64'):
    config = ModelConfig(src_vocab_size=8, tgt_vocab_size=7, embedding_dim=4, hidden_dim=4,
                         attention_dim=4, deep_output_dim=4, init_scale=0.5, dtype=dtype)
    return AttentionalModel(config), ParameterSet.initialize(config, seed=seed)


def _ordered_pair(model, params, src):
    """(más probable, menos probable) entre dos secuencias fijas, ambas con </s>."""
    first, second = (4, EOS), (5, 6, EOS)
    if model.log_prob(src, list(first), params) >= model.log_prob(src, list(second), params):
        return first, second
    return second, first


class GradientRuleTests(SimpleTestCase):

    def test_sgd(self):
        params = sgd_update(_scalar(1.0), _grad(0.5), 1e-3)
        self.assertAlmostEqual(params['w'].values[0], 0.9995, places=12)

    def test_sgd_gradiente_cero(self):
        params = sgd_update(_scalar(1.0), _grad(0.0), 1e-3)
        self.assertEqual(params['w'].values[0], 1.0)

    def test_adagrad_dos_pasos(self):
        params, state = _scalar(0.0), OptimizerState('adagrad', 1e-4, eps=1e-8)
        adagrad_update(params, _grad(1.0), state)
        first = -1e-4 / math.sqrt(1 + 1e-8)
        self.assertAlmostEqual(params['w'].values[0], first, delta=1e-16)
        adagrad_update(params, _grad(1.0), state)
        self.assertAlmostEqual(params['w'].values[0] - first, -1e-4 / math.sqrt(2 + 1e-8), delta=1e-16)

    def test_adagrad_sin_gradiente_no_cambia(self):
        params, state = _scalar(0.3), OptimizerState('adagrad', 1e-4)
        for _ in range(5):
            adagrad_update(params, _grad(0.0), state)
        self.assertEqual(params['w'].values[0], 0.3)
        self.assertEqual(state.accumulators['sum_sq']['w'][0], 0.0)

    def test_adadelta_primer_paso(self):
        params, state = _scalar(0.0), OptimizerState('adadelta', 0.1, eps=1e-6, decay=0.95)
        adadelta_update(params, _grad(1.0), state)
        expected = -0.1 * math.sqrt(1e-6) / math.sqrt(0.05 + 1e-6)
        self.assertAlmostEqual(params['w'].values[0], expected, delta=1e-12)

    def test_adadelta_gradiente_cero_solo_decae(self):
        params, state = _scalar(0.0), OptimizerState('adadelta', 0.1, eps=1e-6, decay=0.95)
        adadelta_update(params, _grad(1.0), state)
        before = params['w'].values[0]
        avg = state.accumulators['avg_sq_grad']['w'][0]
        adadelta_update(params, _grad(0.0), state)
        self.assertEqual(params['w'].values[0], before)
        self.assertAlmostEqual(state.accumulators['avg_sq_grad']['w'][0], 0.95 * avg, delta=1e-15)

    def test_adam_primer_paso_es_signo(self):
        for g in (0.3, -2.0, 1e-3):
            params, state = _scalar(0.0), OptimizerState('adam', 1e-3)
            adam_update(params, _grad(g), state)
            self.assertAlmostEqual(params['w'].values[0], -1e-3 * g / (abs(g) + 1e-8), delta=1e-10)
            self.assertEqual(state.step, 1)

    def test_adam_contador_y_gradiente_cero(self):
        params, state = _scalar(0.5), OptimizerState('adam', 1e-3)
        for t in range(1, 4):
            adam_update(params, _grad(0.0), state)
            self.assertEqual(state.step, t)
        self.assertEqual(params['w'].values[0], 0.5)

    def test_formas_desalineadas(self):
        with self.assertRaises(DimensionError):
            sgd_update(_scalar(), {'w': np.zeros(2)}, 0.1)
        with self.assertRaises(DimensionError):
            adam_update(_scalar(), {}, OptimizerState('adam', 0.1))

    def test_acumuladores_no_negativos(self):
        rng = np.random.default_rng(0)
        params = ParameterSet({'w': rng.normal(size=6)}, dtype='float64')
        state = OptimizerState('adadelta', 1.0)
        for _ in range(20):
            adadelta_update(params, {'w': rng.normal(size=6)}, state)
        for slot in state.accumulators.values():
            self.assertTrue(np.all(slot['w'] >= 0))


class ConvergenceSmokeTests(SimpleTestCase):

    LEARNING_RATES = {'sgd': 0.1, 'adagrad': 0.5, 'adadelta': 1.0, 'adam': 0.01}

    def test_cuadratica_convexa(self):
        rng = np.random.default_rng(3)
        target = rng.normal(size=5)
        start = rng.normal(size=5)
        start = target + start / np.linalg.norm(start)
        for algorithm, lr in self.LEARNING_RATES.items():
            params = ParameterSet({'w': start.copy()}, dtype='float64')
            state = OptimizerState(algorithm, lr, eps=1e-6 if algorithm == 'adadelta' else 1e-8)
            reached = False
            for _ in range(10000):
                gradient_update(params, {'w': params['w'].values - target}, state)
                if np.linalg.norm(params['w'].values - target) < 1e-3:
                    reached = True
                    break
            self.assertTrue(reached, algorithm)


class OptimizerStateTests(SimpleTestCase):

    def test_ida_y_vuelta_exacta(self):
        rng = np.random.default_rng(1)
        params = ParameterSet({'a': rng.normal(size=(2, 3)), 'b': rng.normal(size=4)}, dtype='float64')
        state = OptimizerState('adam', 1e-3)
        for _ in range(3):
            adam_update(params, {'a': rng.normal(size=(2, 3)), 'b': rng.normal(size=4)}, state)
        restored = OptimizerState.from_dict(json.loads(json.dumps(state.to_dict())))
        self.assertTrue(restored.equals(state))
        self.assertEqual(restored.accumulators['m']['a'].shape, (2, 3))

    def test_algoritmo_desconocido(self):
        with self.assertRaises(ConfigurationError):
            OptimizerState('rmsprop', 0.1)


class PAInnerLoopTests(SimpleTestCase):

    def test_minimo_coincide_con_busqueda_en_rejilla(self):
        grid = np.linspace(-3.0, 3.0, 600001)
        for a, b, C in ((1.0, 1.0, 0.5), (-2.0, 3.0, 0.3), (0.5, 2.0, 1.0)):
            cfg = PAConfig(lr=0.5, C=C, k_max=60, clip_norm=None)
            result = minimize_pa(np.zeros(1), _linear(a, b), cfg)
            objective = 0.5 * grid ** 2 + C * np.maximum(0.0, a * grid + b)
            self.assertEqual(result.status, 'applied')
            self.assertAlmostEqual(result.theta[0], grid[np.argmin(objective)], delta=1e-3)

    def test_paso_unitario_llega_en_una_iteracion(self):
        cfg = PAConfig(lr=1.0, C=0.5, k_max=10, clip_norm=None)
        result = minimize_pa(np.zeros(1), _linear(1.0, 1.0), cfg)
        self.assertAlmostEqual(result.theta[0], -0.5, places=12)

    def test_pasivo_devuelve_el_mismo_vector(self):
        theta = np.array([0.25, -1.0])
        for projected in (False, True):
            result = minimize_pa(theta, _linear([1.0, 1.0], 0.0), PAConfig(lr=1.0, C=0.1), projected=projected)
            self.assertEqual(result.status, 'passive')
            self.assertIs(result.theta, theta)

    def test_no_finito_se_omite(self):
        theta = np.array([1.0])
        result = minimize_pa(theta, lambda t: (float('nan'), np.zeros(1)), PAConfig(lr=1.0, C=0.1))
        self.assertEqual(result.status, 'skipped')
        np.testing.assert_array_equal(result.theta, theta)

    def test_ppas_norma_igual_a_c(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            a = rng.normal(size=8)
            C = float(10.0 ** rng.uniform(-4, 0))
            theta_t = rng.normal(size=8)
            b = abs(float(a @ theta_t)) + 0.5
            result = minimize_pa(theta_t, _linear(a, b), PAConfig(lr=1e-2, C=C, k_max=10), projected=True)
            norm = np.linalg.norm(result.theta - theta_t)
            self.assertAlmostEqual(norm / C, 1.0, delta=1e-6)

    def test_ppas_proyeccion_real_no_agranda(self):
        theta_t = np.zeros(3)
        cfg = PAConfig(lr=1e-3, C=10.0, k_max=2, clip_norm=None, true_projection=True)
        result = minimize_pa(theta_t, _linear([1.0, 0.0, 0.0], 5.0), cfg, projected=True)
        self.assertAlmostEqual(result.displacement_norm, 2e-3, places=12)

    def test_pas_nunca_empeora_el_objetivo(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            w = rng.normal(size=4)
            theta_t = rng.normal(size=4)
            C = float(rng.uniform(0.1, 2.0))

            def loss_and_grad(theta, w=w):
                return float(np.sum(np.sin(w * theta)) + 1.0), w * np.cos(w * theta)

            cfg = PAConfig(lr=float(rng.uniform(0.1, 2.0)), C=C, k_max=10, clip_norm=1.0)
            result = minimize_pa(theta_t, loss_and_grad, cfg)
            start = C * max(0.0, loss_and_grad(theta_t)[0])
            diff = result.theta - theta_t
            end = 0.5 * float(diff @ diff) + C * max(0.0, loss_and_grad(result.theta)[0])
            self.assertLessEqual(end, start + 1e-12)

    def test_pas_reduce_la_perdida_en_casi_todas_las_violaciones(self):
        rng = np.random.default_rng(23)
        violated = decreased = 0
        for _ in range(100):
            w = rng.normal(size=4)
            theta_t = rng.normal(size=4)

            def loss_and_grad(theta, w=w):
                return float(np.sum(np.sin(w * theta)) + 1.0), w * np.cos(w * theta)

            cfg = PAConfig(lr=float(rng.uniform(0.1, 1.0)), C=float(rng.uniform(0.05, 0.3)), k_max=10)
            result = minimize_pa(theta_t, loss_and_grad, cfg)
            if result.status == 'passive':
                self.assertIs(result.theta, theta_t)
                continue
            violated += 1
            decreased += result.final_loss < result.initial_loss
        self.assertGreater(violated, 50)
        self.assertGreaterEqual(decreased, 0.9 * violated)

    def test_configuracion_invalida(self):
        with self.assertRaises(ConfigurationError):
            PAConfig(lr=1.0, C=0.0)
        with self.assertRaises(ConfigurationError):
            PAConfig(lr=1.0, C=0.1, k_max=0)


class PAModelTests(SimpleTestCase):

    def test_perdida_cero_si_hipotesis_es_referencia(self):
        model, params = _toy_model()
        self.assertEqual(pa_loss(model, params, [4, 5], (4, EOS), (4, EOS)), 0.0)

    def test_perdida_contra_puntuacion_independiente(self):
        model, params = _toy_model(seed=2)
        src = [4, 6, 5]

        def score(tokens):
            annotations = model.encode(src, params)
            state = model.initial_state(annotations, params)
            prev, total = BOS, 0.0
            for token in tokens:
                context, _ = model.attend(annotations, state, params)
                state, dist = model.decode_step(prev, state, context, params)
                total += math.log(dist.values[token])
                prev = token
            return total

        for hyp, ref in (((4, EOS), (5, 6, EOS)), ((3, 3, EOS), (EOS,))):
            self.assertAlmostEqual(pa_loss(model, params, src, ref, hyp), score(hyp) - score(ref), delta=1e-6)

    def test_gradiente_de_la_perdida(self):
        model, params = _toy_model(seed=4)
        src, hyp, ref = [4, 5], (6, EOS), (4, 5, EOS)
        _, grad = pa_loss_and_gradient(model, params, src, ref, hyp)
        flat = params.unflatten(grad)
        for name in ('readout_W', 'dec_W', 'src_emb'):
            values = params[name].values
            numeric = numerical_gradient(lambda: pa_loss(model, params, src, ref, hyp), values, indices=range(5))
            for i, value in numeric.items():
                self.assertAlmostEqual(flat[name].reshape(-1)[i], value, delta=1e-6)

    def test_pasividad_en_el_modelo(self):
        model, params = _toy_model(seed=6)
        src = [4, 7]
        likely, unlikely = _ordered_pair(model, params, src)
        before = params.copy()
        for name in ('pas', 'ppas'):
            learner = OnlineLearner(OptimizerSpec.from_settings(name))
            # La referencia ya es más probable que la hipótesis: ℓ < 0
            result = learner.update(model, params, src, likely[:-1], unlikely)
            self.assertEqual(result.status, 'passive')
            self.assertTrue(params.equals(before))

    def test_ppas_desplazamiento_de_norma_c(self):
        model, params = _toy_model(seed=8)
        src = [5, 4, 6]
        likely, unlikely = _ordered_pair(model, params, src)
        before = params.flat()
        learner = OnlineLearner(OptimizerSpec.from_settings('ppas', C=0.05))
        result = learner.update(model, params, src, unlikely[:-1], likely)
        self.assertEqual(result.status, 'applied')
        self.assertAlmostEqual(np.linalg.norm(params.flat() - before) / 0.05, 1.0, delta=1e-6)

    def test_pas_acerca_la_referencia(self):
        model, params = _toy_model(seed=9)
        src = [6, 6]
        likely, unlikely = _ordered_pair(model, params, src)
        loss_before = pa_loss(model, params, src, unlikely, likely)
        learner = OnlineLearner(OptimizerSpec.from_settings('pas', C=0.1))
        result = learner.update(model, params, src, unlikely[:-1], likely)
        self.assertEqual(result.status, 'applied')
        self.assertLess(pa_loss(model, params, src, unlikely, likely), loss_before)


class PAToyTaskTests(SimpleTestCase):
    """PAS y PPAS en línea sobre 100 pares de la tarea de sustitución."""

    def setUp(self):
        task = generate_toy_task('substitution-grammar', 60, 100, vocab_size=6, max_len=4, seed=12)
        pipeline = TextPipeline.build(task.ood_train, 100)
        self.pairs = pipeline.encode_pairs(task.test)
        config = ModelConfig(src_vocab_size=len(pipeline.src_vocab), tgt_vocab_size=len(pipeline.tgt_vocab),
                             embedding_dim=6, hidden_dim=6, attention_dim=6, deep_output_dim=6, beam_size=2,
                             max_output_length=6, init_scale=0.5, weight_noise_sigma=0.0, dtype='float64')
        self.model = AttentionalModel(config)
        self.params = ParameterSet.initialize(config, seed=12)

    def _stream(self, update, cfg):
        for pair in self.pairs:
            hyp = self.model.beam_search(pair.src, self.params, 2)
            ref = tuple(pair.tgt) + (EOS,)
            before_flat = self.params.flat()
            before_loss = pa_loss(self.model, self.params, pair.src, ref, hyp.tokens)
            result = update(self.model, self.params, pair.src, ref, hyp, cfg)
            yield result, before_flat, before_loss, pa_loss(self.model, self.params, pair.src, ref, hyp.tokens)

    def test_pas_no_aumenta_la_perdida(self):
        cfg = OptimizerSpec.from_settings('pas', C=0.1).pa_config
        statuses = []
        for result, before_flat, before_loss, after_loss in self._stream(pas_update, cfg):
            statuses.append(result.status)
            if result.status == 'applied':
                self.assertGreater(before_loss, 0.0)
                self.assertLessEqual(after_loss, before_loss + 1e-9)
            else:
                self.assertEqual(result.status, 'passive')
                self.assertTrue(np.array_equal(self.params.flat(), before_flat))
        self.assertEqual(len(statuses), len(self.pairs))
        self.assertGreaterEqual(statuses.count('applied'), 20)

    def test_ppas_respeta_la_norma_del_paso(self):
        C = 0.05
        cfg = OptimizerSpec.from_settings('ppas', C=C).pa_config
        applied = 0
        for result, before_flat, before_loss, _ in self._stream(ppas_update, cfg):
            moved = np.linalg.norm(self.params.flat() - before_flat)
            if result.status == 'applied':
                applied += 1
                self.assertGreater(before_loss, 0.0)
                self.assertAlmostEqual(moved / C, 1.0, delta=1e-6)
                self.assertAlmostEqual(result.displacement_norm / C, 1.0, delta=1e-6)
            else:
                self.assertEqual(result.status, 'passive')
                self.assertEqual(moved, 0.0)
        self.assertGreaterEqual(applied, 20)


class OnlineLearnerTests(SimpleTestCase):

    def test_sin_optimizador_congela(self):
        model, params = _toy_model()
        before = params.copy()
        result = OnlineLearner(OptimizerSpec.from_settings('none')).update(model, params, [4], [5], (EOS,))
        self.assertEqual(result.status, 'frozen')
        self.assertTrue(params.equals(before))

    def test_gradiente_sube_la_probabilidad_de_la_referencia(self):
        for name, lr in (('sgd', 0.05), ('adagrad', 1e-3), ('adadelta', 1.0), ('adam', 1e-3)):
            model, params = _toy_model(seed=1)
            before = model.log_prob([4, 5], [6, 4, EOS], params)
            learner = OnlineLearner(OptimizerSpec.from_settings(name, lr=lr))
            for _ in range(3):
                result = learner.update(model, params, [4, 5], [6, 4], (EOS,))
                self.assertEqual(result.status, 'applied')
            self.assertGreater(model.log_prob([4, 5], [6, 4, EOS], params), before, name)

    def test_valores_por_defecto(self):
        expected = {'sgd': 1e-3, 'adagrad': 1e-4, 'adadelta': 1e-1, 'adam': 1e-3, 'pas': 1.0, 'ppas': 1e-2}
        for name, lr in expected.items():
            spec = OptimizerSpec.from_settings(name)
            self.assertEqual(spec.lr, lr)
            self.assertEqual(spec.k_max, 10)
        self.assertEqual(OptimizerSpec.from_settings('pas').C, 1e-2)
        self.assertEqual(OptimizerSpec.from_settings('ppas', C=0.5).C, 0.5)

    def test_optimizador_desconocido(self):
        with self.assertRaises(ConfigurationError):
            OptimizerSpec.from_settings('rmsprop')
        with self.assertRaises(ConfigurationError):
            OptimizerSpec('pas', lr=1.0, C=None)


class HyperparameterGridTests(SimpleTestCase):

    def test_tamanos(self):
        self.assertEqual(len(hyperparameter_grid('sgd')), 7)
        self.assertEqual(len(hyperparameter_grid('adam')), 7)
        self.assertEqual(len(hyperparameter_grid('pas')), 49)
        self.assertEqual(len(hyperparameter_grid('ppas')), 49)

    def test_valores_por_defecto_pertenecen_a_la_rejilla(self):
        for name in ('sgd', 'adagrad', 'adadelta', 'adam', 'pas', 'ppas'):
            spec = OptimizerSpec.from_settings(name)
            grid = hyperparameter_grid(name)
            self.assertTrue(any(
                math.isclose(point['lr'], spec.lr) and ('C' not in point or math.isclose(point['C'], spec.C))
                for point in grid
            ), name)
