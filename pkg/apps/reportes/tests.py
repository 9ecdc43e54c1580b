import itertools
import json
import tempfile
from io import StringIO
from pathlib import Path

import numpy as np
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from config.exceptions import MetricError
from .bleu import bleu, bleu_details, bleu_from_stats, corpus_stats as bleu_stats
from .bootstrap import bootstrap_ci, cumulative_curve
from .informe import EvalReport, compare_systems, evaluate, render_jsonl, render_text
from .ter import corpus_stats as ter_stats, edit_distance, sentence_edits, ter, ter_from_stats, wer


def _random_corpus(rng, n, vocab=('a', 'b', 'c', 'd', 'e')):
    def sentence():
        return " ".join(rng.choice(vocab, size=int(rng.integers(1, 9))))
    return [sentence() for _ in range(n)], [sentence() for _ in range(n)]


class BleuTests(SimpleTestCase):

    def test_identicas_dan_cien(self):
        refs = ["el gato duerme en la casa", "hola", "a b"]
        self.assertEqual(bleu(refs, refs), 100.0)

    def test_sin_unigramas_comunes(self):
        self.assertEqual(bleu(["x y z w"], ["a b c d"]), 0.0)

    def test_precision_recortada(self):
        details = bleu_details(bleu_stats(["the the the cat"], ["the cat sat down"]))
        self.assertEqual(details.precisions[0], 50.0)

    def test_penalizacion_por_brevedad(self):
        details = bleu_details(bleu_stats(["a b c d"], ["a b c d e f g h"]))
        self.assertAlmostEqual(details.bp, np.exp(1 - 8 / 4))
        self.assertAlmostEqual(details.score, 100.0 * np.exp(1 - 8 / 4))

    def test_longitudes_distintas(self):
        with self.assertRaises(MetricError):
            bleu(["a"], ["a", "b"])
        with self.assertRaises(MetricError):
            bleu([], [])

    def test_rango_y_permutacion(self):
        rng = np.random.default_rng(0)
        for _ in range(30):
            hyps, refs = _random_corpus(rng, 12)
            score = bleu(hyps, refs)
            self.assertGreaterEqual(score, 0.0)
            self.assertLessEqual(score, 100.0)
            order = rng.permutation(12)
            self.assertEqual(bleu([hyps[i] for i in order], [refs[i] for i in order]), score)

    def test_suavizado_add_k_evita_el_cero(self):
        stats = bleu_stats(["a b c d e"], ["a b c d e"])
        self.assertEqual(bleu_from_stats(stats, smooth=True), bleu_from_stats(stats))
        stats = bleu_stats(["a x b y c"], ["a b c d e"])
        self.assertEqual(bleu_from_stats(stats), 0.0)
        self.assertGreater(bleu_from_stats(stats, smooth=True), 0.0)


class TerTests(SimpleTestCase):

    def test_identicas(self):
        self.assertEqual(ter(["a b c"], ["a b c"]), 0.0)

    def test_una_sustitucion(self):
        self.assertEqual(ter(["a b x d e"], ["a b c d e"]), 20.0)

    def test_desplazamiento_mas_barato(self):
        self.assertEqual(ter(["b a"], ["a b"]), 50.0)
        self.assertEqual(wer(["b a"], ["a b"]), 100.0)

    def test_bloque_desplazado(self):
        # Un desplazamiento de bloque en lugar de cuatro ediciones
        self.assertEqual(sentence_edits("c d a b", "a b c d"), 1)

    def test_sin_recorte_a_cien(self):
        self.assertEqual(ter(["a b c d"], ["x"]), 400.0)

    def test_referencia_vacia(self):
        with self.assertRaises(MetricError):
            ter(["a"], [""])

    def test_sin_desplazamientos_es_levenshtein(self):
        rng = np.random.default_rng(1)
        hyps, refs = _random_corpus(rng, 20)
        edits = sum(edit_distance(h.split(), r.split()) for h, r in zip(hyps, refs))
        words = sum(len(r.split()) for r in refs)
        self.assertAlmostEqual(wer(hyps, refs), 100.0 * edits / words)

    def test_permutacion(self):
        rng = np.random.default_rng(2)
        hyps, refs = _random_corpus(rng, 15)
        order = rng.permutation(15)
        self.assertAlmostEqual(ter([hyps[i] for i in order], [refs[i] for i in order]), ter(hyps, refs))

    def test_exhaustivo_desplazamientos_nunca_empeoran(self):
        sentences = [list(s) for n in range(6) for s in itertools.product('abc', repeat=n)]
        for hyp in sentences:
            for ref in sentences:
                if not ref:
                    continue
                shifted = sentence_edits(hyp, ref)
                self.assertGreaterEqual(shifted, 0)
                self.assertLessEqual(shifted, edit_distance(hyp, ref), f"{hyp} / {ref}")


class BootstrapTests(SimpleTestCase):

    def test_estadisticas_identicas_intervalo_nulo(self):
        stats = np.tile(bleu_stats(["a b c d e"], ["a b c x e"]), (30, 1))
        point, low, high = bootstrap_ci(stats, 200, seed=1)
        self.assertEqual(low, high)
        self.assertEqual(point, low)

    def test_reproducible(self):
        rng = np.random.default_rng(3)
        stats = bleu_stats(*_random_corpus(rng, 40))
        self.assertEqual(bootstrap_ci(stats, 100, seed=7), bootstrap_ci(stats, 100, seed=7))

    def test_intervalo_contiene_al_punto(self):
        rng = np.random.default_rng(4)
        for trial in range(100):
            edits = rng.integers(0, 8, size=50)
            stats = np.column_stack([edits, rng.integers(4, 12, size=50)]).astype(np.float64)
            point, low, high = bootstrap_ci(stats, 200, seed=trial, metric='ter')
            self.assertLessEqual(low, point)
            self.assertGreaterEqual(high, point)

    def test_limites_son_los_percentiles_sin_recortar(self):
        rng = np.random.default_rng(9)
        stats = bleu_stats(*_random_corpus(rng, 60))
        point, low, high = bootstrap_ci(stats, 150, seed=11)

        resample = np.random.default_rng(11)
        scores = [bleu_from_stats(stats[resample.integers(0, 60, size=60)].sum(axis=0)) for _ in range(150)]
        expected_low, expected_high = np.percentile(scores, [2.5, 97.5])
        self.assertEqual(low, float(expected_low))
        self.assertEqual(high, float(expected_high))
        self.assertEqual(point, bleu_from_stats(stats.sum(axis=0)))

    def test_intervalo_se_estrecha_con_mas_oraciones(self):
        rng = np.random.default_rng(5)

        def width(n):
            stats = np.column_stack([rng.integers(0, 10, size=n), np.full(n, 10)]).astype(np.float64)
            _, low, high = bootstrap_ci(stats, 300, seed=0, metric='ter')
            return high - low

        self.assertGreater(width(20), width(500))

    def test_n_resamples_invalido(self):
        with self.assertRaises(ValueError):
            bootstrap_ci(np.ones((3, 2)), -1, metric='ter')


class CumulativeCurveTests(SimpleTestCase):

    def test_primer_punto_y_ultimo(self):
        rng = np.random.default_rng(6)
        hyps, refs = _random_corpus(rng, 25)
        stats = ter_stats(hyps, refs)
        curve = cumulative_curve(stats, metric='ter')
        self.assertEqual(len(curve), 25)
        self.assertEqual(curve[0], ter_from_stats(stats[0]))
        self.assertEqual(curve[-1], ter(hyps, refs))
        bleu_curve = cumulative_curve(bleu_stats(hyps, refs), smooth=False)
        self.assertEqual(bleu_curve[-1], bleu(hyps, refs))

    def test_flujo_constante_es_plano(self):
        stats = np.tile([2.0, 10.0], (15, 1))
        curve = cumulative_curve(stats, metric='ter')
        self.assertTrue(all(value == curve[0] for value in curve))

    def test_bleu_suavizado_definido_desde_el_inicio(self):
        curve = cumulative_curve(bleu_stats(["a x"], ["a b"]))
        self.assertGreater(curve[0], 0.0)


class ReportTests(SimpleTestCase):

    def _report(self, name, bleu_score, ter_score, half=1.0):
        return EvalReport(name, 100, bleu_score, bleu_score - half, bleu_score + half,
                          ter_score, ter_score - half, ter_score + half)

    def test_evaluate(self):
        rng = np.random.default_rng(8)
        hyps, refs = _random_corpus(rng, 30)
        report = evaluate(hyps, refs, name='pas', n_resamples=50, seed=3)
        self.assertEqual(report.n_sentences, 30)
        self.assertAlmostEqual(report.bleu, bleu(hyps, refs))
        self.assertAlmostEqual(report.ter, ter(hyps, refs))
        self.assertGreaterEqual(report.bleu_half_width, 0.0)
        self.assertGreaterEqual(report.ter_half_width, 0.0)
        self.assertEqual(report, evaluate(hyps, refs, name='pas', n_resamples=50, seed=3))

    def test_compare_systems(self):
        baseline = self._report('estático', 30.0, 60.0)
        systems = [self._report('pas', 35.0, 51.0), self._report('sgd', 30.5, 59.5)]
        comparisons, best = compare_systems(baseline, systems)
        by_name = {c.name: c for c in comparisons}
        self.assertTrue(by_name['pas'].bleu_significant)
        self.assertTrue(by_name['pas'].ter_significant)
        self.assertAlmostEqual(by_name['pas'].relative_ter_reduction, 15.0)
        self.assertFalse(by_name['sgd'].bleu_significant)
        self.assertFalse(by_name['sgd'].ter_significant)
        self.assertEqual(best, 'pas')

    def test_render(self):
        baseline = self._report('estático', 30.0, 60.0)
        systems = [self._report('pas', 35.0, 51.0)]
        comparisons, best = compare_systems(baseline, systems)
        text = render_text([baseline] + systems, comparisons, best)
        self.assertIn('pas', text)
        self.assertIn('*', text)
        self.assertIn('(mejor)', text)
        records = [json.loads(line) for line in render_jsonl([baseline] + systems, comparisons).splitlines()]
        self.assertEqual([r['kind'] for r in records], ['report', 'report', 'comparison'])
        self.assertEqual(records[0]['bleu_half_width'], 1.0)


class EvaluateCommandTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.ref = self.dir / 'ref.txt'
        self.ref.write_text("el gato come pescado.\nla casa es grande\n", encoding='utf-8')

    def tearDown(self):
        self.tmp.cleanup()

    def _evaluate(self, hyp, **options):
        stdout = StringIO()
        call_command('evaluate', hyp=str(hyp), ref=str(self.ref), bootstrap_samples=50,
                     out_dir=str(self.dir / 'out'), stdout=stdout, **options)
        return stdout.getvalue()

    def test_bleu_de_archivos_identicos(self):
        output = self._evaluate(self.ref, metric='bleu')
        self.assertIn('BLEU 100.0', output)

    def test_ter_de_archivos_identicos(self):
        self.assertIn('TER 0.0', self._evaluate(self.ref, metric='ter'))

    def test_reporte_completo(self):
        hyp = self.dir / 'hyp.txt'
        hyp.write_text("el gato come carne.\nla casa es grande\n", encoding='utf-8')
        output = self._evaluate(hyp)
        self.assertIn('BLEU', output)
        records = [json.loads(line) for line in (self.dir / 'out' / 'report.jsonl').read_text(encoding='utf-8').splitlines()]
        self.assertEqual(records[0]['n_sentences'], 2)

    def test_numero_de_lineas_distinto(self):
        hyp = self.dir / 'hyp.txt'
        hyp.write_text("una sola línea\n", encoding='utf-8')
        with self.assertRaises(CommandError):
            self._evaluate(hyp, metric='bleu')

    def test_metrica_invalida(self):
        with self.assertRaises(CommandError):
            call_command('evaluate', '--metric', 'meteor', '--hyp', str(self.ref), '--ref', str(self.ref),
                         '--out-dir', str(self.dir / 'out'), stdout=StringIO())
