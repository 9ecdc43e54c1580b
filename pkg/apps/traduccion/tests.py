import itertools
import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from apps.autodiff.gradcheck import numerical_gradient, relative_error
from apps.autodiff.graph import Graph
from apps.corpus.vocabulary import EOS, SPECIAL_SYMBOLS, VocabularyMap
from apps.subpalabras.bpe import MergeTable
from config.exceptions import CheckpointError, ConfigurationError, VocabularyError
from .beam import beam_search
from .checkpoint import Checkpoint
from .configuracion import ModelConfig
from .model import AttentionalModel
from .parameters import ParameterSet, apply_weight_noise


def _config(src=10, tgt=8, dim=6, **extra):
    values = dict(embedding_dim=dim, hidden_dim=dim, attention_dim=dim, deep_output_dim=dim, dtype='float64')
    values.update(extra)
    return ModelConfig(src_vocab_size=src, tgt_vocab_size=tgt, **values)


def _model(seed=0, **kwargs):
    config = _config(**kwargs)
    return AttentionalModel(config), ParameterSet.initialize(config, seed=seed)


class ModelConfigTests(SimpleTestCase):

    def test_vocabulario_sin_especiales(self):
        with self.assertRaises(ConfigurationError):
            ModelConfig(src_vocab_size=3, tgt_vocab_size=10)

    def test_dtype_invalido(self):
        with self.assertRaises(ConfigurationError):
            ModelConfig(src_vocab_size=10, tgt_vocab_size=10, dtype='float16')

    def test_to_dict_from_dict(self):
        config = _config(beam_size=3)
        self.assertEqual(ModelConfig.from_dict(config.to_dict()), config)

    def test_sesgo_de_olvido_en_uno(self):
        config = _config()
        params = ParameterSet.initialize(config)
        H = config.hidden_dim
        for name in ('enc_fw_b', 'enc_bw_b', 'dec_b'):
            np.testing.assert_array_equal(params[name].values[H:2 * H], 1.0)
            np.testing.assert_array_equal(params[name].values[:H], 0.0)

    def test_solo_los_sesgos_empiezan_en_cero(self):
        config = _config()
        params = ParameterSet.initialize(config, seed=1)
        for name, tensor in params.items():
            if name.endswith('_b'):
                continue
            self.assertTrue(np.all(np.abs(tensor.values) <= config.init_scale), name)
            self.assertTrue(np.any(tensor.values != 0.0), name)
        np.testing.assert_array_equal(params['att_b'].values, 0.0)

    def test_inicializacion_reproducible(self):
        config = _config()
        self.assertTrue(ParameterSet.initialize(config, seed=5).equals(ParameterSet.initialize(config, seed=5)))
        self.assertFalse(ParameterSet.initialize(config, seed=5).equals(ParameterSet.initialize(config, seed=6)))


class EncoderAttentionTests(SimpleTestCase):

    def test_forma_de_las_anotaciones(self):
        model, params = _model()
        self.assertEqual(model.encode([4, 5, 6, 7, 8], params).shape, (5, 12))
        self.assertEqual(model.encode([4], params).shape, (1, 12))

    def test_fuente_vacia(self):
        model, params = _model()
        with self.assertRaises(VocabularyError):
            model.encode([], params)

    def test_token_fuera_de_vocabulario(self):
        model, params = _model()
        with self.assertRaises(VocabularyError):
            model.encode([4, 10], params)
        with self.assertRaises(VocabularyError):
            model.log_prob([4], [8, EOS], params)

    def test_direcciones_con_pesos_iguales_son_simetricas(self):
        model, params = _model(seed=3)
        params['enc_bw_W'].values[...] = params['enc_fw_W'].values
        params['enc_bw_b'].values[...] = params['enc_fw_b'].values
        H = model.config.hidden_dim
        src = [4, 9, 5, 7]
        left = model.encode(src, params).values
        right = model.encode(src[::-1], params).values
        np.testing.assert_allclose(left[:, :H], right[::-1, H:], atol=1e-12)
        np.testing.assert_allclose(left[:, H:], right[::-1, :H], atol=1e-12)

    def test_atencion_uniforme_si_v_es_cero(self):
        model, params = _model()
        params['att_v'].values[...] = 0.0
        annotations = model.encode([4, 5, 6], params)
        state = model.initial_state(annotations, params)
        context, weights = model.attend(annotations, state, params)
        np.testing.assert_allclose(weights.values, [1 / 3] * 3)
        np.testing.assert_allclose(context.values, annotations.values.mean(axis=0))

    def test_atencion_con_una_anotacion(self):
        model, params = _model(seed=2)
        annotations = model.encode([6], params)
        context, weights = model.attend(annotations, model.initial_state(annotations, params), params)
        np.testing.assert_allclose(weights.values, [1.0])
        np.testing.assert_allclose(context.values, annotations.values[0])

    def test_contexto_es_combinacion_convexa(self):
        model, params = _model(seed=4, init_scale=0.5)
        annotations = model.encode([4, 5, 6, 7], params)
        context, weights = model.attend(annotations, model.initial_state(annotations, params), params)
        self.assertAlmostEqual(float(weights.values.sum()), 1.0, places=12)
        np.testing.assert_allclose(context.values, weights.values @ annotations.values)


class DecoderTests(SimpleTestCase):

    def test_parametros_cero_dan_distribucion_uniforme(self):
        config = _config()
        model, params = AttentionalModel(config), ParameterSet.zeros(config)
        annotations = model.encode([4, 5], params)
        state = model.initial_state(annotations, params)
        context, _ = model.attend(annotations, state, params)
        _, dist = model.decode_step(1, state, context, params)
        np.testing.assert_allclose(dist.values, np.full(config.tgt_vocab_size, 1 / config.tgt_vocab_size))

    def test_distribucion_suma_uno(self):
        model, params = _model(seed=1, init_scale=1.0)
        annotations = model.encode([4, 5, 9], params)
        state = model.initial_state(annotations, params)
        context, _ = model.attend(annotations, state, params)
        _, dist = model.decode_step(1, state, context, params)
        self.assertAlmostEqual(float(dist.values.sum()), 1.0, places=12)
        self.assertTrue(np.all(dist.values > 0))

    def test_primer_paso_coincide_con_puntuacion_forzada(self):
        model, params = _model(seed=7, init_scale=0.5)
        src = [5, 6, 4]
        annotations = model.encode(src, params)
        state = model.initial_state(annotations, params)
        context, _ = model.attend(annotations, state, params)
        _, dist = model.decode_step(1, state, context, params)
        for token in range(model.config.tgt_vocab_size):
            self.assertAlmostEqual(model.log_prob(src, [token], params), math.log(dist.values[token]), places=10)

    def test_masa_total_es_uno(self):
        model, params = _model(seed=11, tgt=6, init_scale=1.0)
        src, vocab = [4, 7], range(6)
        total = math.exp(model.log_prob(src, [EOS], params))
        for x in vocab:
            if x != EOS:
                total += math.exp(model.log_prob(src, [x, EOS], params))
        for x, y in itertools.product(vocab, vocab):
            if EOS not in (x, y):
                total += math.exp(model.log_prob(src, [x, y], params))
        self.assertAlmostEqual(total, 1.0, places=9)

    def test_log_prob_determinista_y_negativa(self):
        model, params = _model(seed=5)
        first = model.log_prob([4, 5], [6, 7, EOS], params)
        self.assertEqual(first, model.log_prob([4, 5], [6, 7, EOS], params))
        self.assertLess(first, 0.0)

    def test_destino_vacio(self):
        model, params = _model()
        with self.assertRaises(VocabularyError):
            model.log_prob([4], [], params)


class ModelGradientTests(SimpleTestCase):

    def test_gradiente_del_modelo_completo(self):
        config = _config(src=12, tgt=12, dim=8, init_scale=0.3)
        model, params = AttentionalModel(config), ParameterSet.initialize(config, seed=21)
        src, tgt = [4, 9, 6], [5, 11, EOS]
        _, grads = model.nll_and_gradients(src, tgt, params)
        for name in params.names:
            values = params[name].values
            analytic = grads[name].reshape(-1)
            self.assertGreater(np.abs(analytic).max(), 1e-8, f"{name}: gradiente nulo")
            # Las entradas de mayor magnitud: el error de truncamiento queda lejos de la tolerancia
            indices = np.argsort(-np.abs(analytic))[:3]
            numeric = numerical_gradient(lambda: -model.log_prob(src, tgt, params), values, eps=1e-4,
                                         indices=indices)
            for i, value in numeric.items():
                self.assertLess(relative_error(analytic[i], value), 1e-4, f"{name}[{i}]")

    def test_todos_los_grupos_reciben_gradiente(self):
        model, params = _model(seed=8, init_scale=0.5)
        _, grads = model.nll_and_gradients([4, 5, 6], [7, 5, EOS], params)
        for name, grad in grads.items():
            self.assertTrue(np.any(grad != 0.0), name)

    def test_todos_los_grupos_reciben_gradiente_con_la_escala_por_defecto(self):
        for seed in range(3):
            model, params = _model(seed=seed)
            _, grads = model.nll_and_gradients([4, 5, 6, 7], [3, 6, EOS], params)
            dead = [name for name, grad in grads.items() if not np.any(grad != 0.0)]
            self.assertEqual(dead, [])

    def test_atencion_no_uniforme_al_inicializar(self):
        model, params = _model(seed=3)
        annotations = model.encode([4, 5, 6, 7], params)
        _, weights = model.attend(annotations, model.initial_state(annotations, params), params)
        self.assertGreater(np.ptp(weights.values), 0.0)

    def test_gradientes_no_se_acumulan_entre_llamadas(self):
        model, params = _model(seed=8)
        _, first = model.nll_and_gradients([4, 5], [6, EOS], params)
        _, second = model.nll_and_gradients([4, 5], [6, EOS], params)
        for name in first:
            np.testing.assert_array_equal(first[name], second[name])


class BeamSearchTests(SimpleTestCase):

    def test_ancho_uno_es_voraz(self):
        for seed in range(10):
            model, params = _model(seed=seed, init_scale=0.5)
            src = [4 + seed % 5, 5, 6]
            greedy = model.greedy_decode(src, params, max_output_length=8)
            beam = model.beam_search(src, params, beam_size=1, max_output_length=8)
            self.assertEqual(beam.tokens, greedy.tokens)
            self.assertEqual(beam.truncated, greedy.truncated)
            self.assertAlmostEqual(beam.log_prob, greedy.log_prob, places=10)

    def test_ancho_uno_es_voraz_con_longitud_corta(self):
        for seed in range(10):
            model, params = _model(seed=seed)
            greedy = model.greedy_decode([4, 5], params, max_output_length=2)
            beam = model.beam_search([4, 5], params, beam_size=1, max_output_length=2)
            self.assertEqual(beam.tokens, greedy.tokens)
            self.assertEqual(beam.truncated, greedy.truncated)

    def test_ancho_mayor_nunca_empeora(self):
        for seed in range(15):
            model, params = _model(seed=seed)
            src = [4, 5 + seed % 4, 9]
            scores = [model.beam_search(src, params, beam_size=k, max_output_length=6).log_prob
                      for k in range(1, 9)]
            for narrow, wide in zip(scores, scores[1:]):
                self.assertGreaterEqual(wide, narrow - 1e-12)

    def test_ancho_mayor_nunca_empeora_al_cortar_por_longitud(self):
        # </s> improbable: casi todas las hipótesis llegan al límite de longitud
        for seed in range(30):
            model, params = _model(seed=seed, init_scale=0.5)
            params['readout_b'].values[EOS] = -2.0 - seed % 3
            src = [4 + seed % 5, 6, 7]
            found = [model.beam_search(src, params, beam_size=k, max_output_length=3 + seed % 4)
                     for k in range(1, 9)]
            for hyp in found:
                self.assertEqual(hyp.tokens[-1], EOS)
            for narrow, wide in zip(found, found[1:]):
                self.assertGreaterEqual(wide.log_prob, narrow.log_prob - 1e-12)

    def test_haz_ancho_es_exhaustivo(self):
        expandable = [EOS, 3, 4, 5]
        for seed in range(100):
            model, params = _model(seed=seed, tgt=6, dim=4, init_scale=1.0)
            src = [4 + seed % 6, 5]
            best_score, best_tokens = -math.inf, None
            for length in range(1, 4):
                for prefix in itertools.product([t for t in expandable if t != EOS], repeat=length - 1):
                    tokens = prefix + (EOS,)
                    score = model.log_prob(src, list(tokens), params)
                    if score > best_score:
                        best_score, best_tokens = score, tokens
            found = model.beam_search(src, params, beam_size=64, max_output_length=3)
            self.assertEqual(found.truncated, len(best_tokens) == 3)
            self.assertAlmostEqual(found.log_prob, best_score, places=9)
            self.assertEqual(found.tokens, best_tokens)

    def test_puntuacion_coincide_con_puntuacion_forzada(self):
        for seed in range(5):
            model, params = _model(seed=seed, init_scale=0.5)
            found = model.beam_search([4, 6], params, beam_size=4, max_output_length=10)
            self.assertAlmostEqual(found.log_prob, model.log_prob([4, 6], list(found.tokens), params), places=9)

    def test_nunca_genera_pad_ni_bos(self):
        model, params = _model(seed=2)
        params['readout_b'].values[[0, 1]] = 50.0
        found = model.beam_search([4], params, beam_size=3, max_output_length=5)
        self.assertNotIn(0, found.tokens)
        self.assertNotIn(1, found.tokens)

    def test_fin_forzado_al_llegar_al_limite(self):
        model, params = _model(seed=2)
        params['readout_b'].values[EOS] = -50.0
        found = model.beam_search([4, 5], params, beam_size=3, max_output_length=3)
        self.assertTrue(found.truncated)
        self.assertEqual(len(found.tokens), 3)
        self.assertEqual(found.tokens[-1], EOS)
        self.assertNotIn(EOS, found.tokens[:-1])
        self.assertAlmostEqual(found.log_prob, model.log_prob([4, 5], list(found.tokens), params), places=9)

    def test_ancho_invalido(self):
        model, params = _model()
        with self.assertRaises(ValueError):
            beam_search(model, [4], params, 0, 5)
        with self.assertRaises(ValueError):
            beam_search(model, [4], params, 2, 0)

    def test_inferencia_no_registra_nodos(self):
        model, params = _model()
        graph = Graph(record=False)
        model.sentence_log_prob([4], [EOS], params, graph)
        self.assertEqual(graph.nodes, [])


class WeightNoiseTests(SimpleTestCase):

    def test_sigma_cero_es_copia_identica(self):
        _, params = _model()
        noisy = apply_weight_noise(params, 0.0, rng_seed=1)
        self.assertTrue(noisy.equals(params))
        self.assertIsNot(noisy['src_emb'], params['src_emb'])

    def test_misma_semilla_mismo_ruido(self):
        _, params = _model()
        first = apply_weight_noise(params, 0.1, rng_seed=3)
        self.assertTrue(first.equals(apply_weight_noise(params, 0.1, rng_seed=3)))
        self.assertFalse(first.equals(apply_weight_noise(params, 0.1, rng_seed=4)))

    def test_no_modifica_el_original(self):
        _, params = _model()
        before = params.copy()
        apply_weight_noise(params, 0.5, rng_seed=0)
        self.assertTrue(params.equals(before))

    def test_estadistica_del_ruido(self):
        params = ParameterSet({'w': np.zeros(200000)}, dtype='float64')
        noise = apply_weight_noise(params, 0.5, rng_seed=9)['w'].values
        self.assertAlmostEqual(float(noise.mean()), 0.0, delta=0.01)
        self.assertAlmostEqual(float(noise.std()), 0.5, delta=0.005)

    def test_sigma_negativo(self):
        _, params = _model()
        with self.assertRaises(ValueError):
            apply_weight_noise(params, -0.1)


class FlatViewTests(SimpleTestCase):

    def test_flat_y_assign_flat(self):
        _, params = _model(seed=1)
        flat = params.flat()
        self.assertEqual(flat.shape, (params.size,))
        other = ParameterSet.zeros(_config())
        other.assign_flat(flat)
        self.assertTrue(other.equals(params))


class CheckpointTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _checkpoint(self, dtype='float32'):
        config = _config(dtype=dtype)
        vocab_src = VocabularyMap(list(SPECIAL_SYMBOLS) + [f"s{i}" for i in range(6)])
        vocab_tgt = VocabularyMap(list(SPECIAL_SYMBOLS) + [f"t{i}" for i in range(4)])
        return Checkpoint(config, ParameterSet.initialize(config, seed=3), vocab_src, vocab_tgt,
                          MergeTable([('l', 'o'), ('lo', 'w</w>')], 'abc'), {'updates': 12})

    def test_ida_y_vuelta(self):
        original = self._checkpoint()
        path = self.dir / 'modelo.npz'
        original.save(path)
        loaded = Checkpoint.load(path)
        self.assertEqual(loaded.config, original.config)
        self.assertTrue(loaded.params.equals(original.params))
        self.assertEqual(loaded.src_vocab, original.src_vocab)
        self.assertEqual(loaded.tgt_vocab, original.tgt_vocab)
        self.assertEqual(loaded.merges, original.merges)
        self.assertEqual(loaded.merges.fingerprint, 'abc')
        self.assertEqual(loaded.meta, {'updates': 12})

    def test_traduce_igual_tras_cargar(self):
        original = self._checkpoint()
        path = self.dir / 'modelo.npz'
        original.save(path)
        loaded = Checkpoint.load(path)
        model = AttentionalModel(loaded.config)
        self.assertEqual(model.beam_search([4, 5], loaded.params, beam_size=2, max_output_length=5),
                         model.beam_search([4, 5], original.params, beam_size=2, max_output_length=5))

    def test_forma_que_no_corresponde(self):
        original = self._checkpoint()
        arrays = original.params.arrays()
        arrays['readout_b'] = np.zeros(3)
        Checkpoint(original.config, ParameterSet(arrays)).save(self.dir / 'malo.npz')
        with self.assertRaises(CheckpointError) as ctx:
            Checkpoint.load(self.dir / 'malo.npz')
        self.assertIn('readout_b', str(ctx.exception))

    def test_parametro_faltante(self):
        original = self._checkpoint()
        arrays = original.params.arrays()
        del arrays['att_v']
        Checkpoint(original.config, ParameterSet(arrays)).save(self.dir / 'malo.npz')
        with self.assertRaises(CheckpointError) as ctx:
            Checkpoint.load(self.dir / 'malo.npz')
        self.assertIn('att_v', str(ctx.exception))

    def test_version_no_soportada(self):
        path = self.dir / 'viejo.npz'
        with open(path, 'wb') as fh:
            np.savez(fh, __header__=np.array('{"format_version": 99}'))
        with self.assertRaises(CheckpointError) as ctx:
            Checkpoint.load(path)
        self.assertIn('99', str(ctx.exception))

    def test_archivo_inexistente(self):
        with self.assertRaises(CheckpointError):
            Checkpoint.load(self.dir / 'no_existe.npz')
