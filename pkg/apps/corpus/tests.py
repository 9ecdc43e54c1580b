import tempfile
from collections import Counter
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.test import SimpleTestCase

from apps.subpalabras.bpe import learn_bpe
from config.exceptions import ConfigurationError, CorpusError, VocabularyError
from .pipeline import TextPipeline, corpus_statistics
from .reader import SentencePair, load_parallel
from .toy import generate_toy_task
from .vocabulary import EOS, SPECIAL_SYMBOLS, UNK, VocabularyMap, build_vocab


class _TempDirMixin:

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _write(self, name, content, mode='w'):
        path = self.dir / name
        if mode == 'wb':
            path.write_bytes(content)
        else:
            path.write_text(content, encoding='utf-8')
        return path


class LoadParallelTests(_TempDirMixin, SimpleTestCase):

    def test_tres_pares_en_orden(self):
        src = self._write('a.src', "uno\ndos\ntres\n")
        tgt = self._write('a.tgt', "one\ntwo\nthree\n")
        pairs = list(load_parallel(src, tgt))
        self.assertEqual([(p.src_text, p.tgt_text) for p in pairs],
                         [('uno', 'one'), ('dos', 'two'), ('tres', 'three')])

    def test_par_con_destino_vacio_se_descarta(self):
        reader = load_parallel(self._write('a.src', "uno\ndos\n"), self._write('a.tgt', "one\n   \n"))
        self.assertEqual(len(list(reader)), 1)
        self.assertEqual(reader.dropped, 1)

    def test_numero_de_lineas_distinto(self):
        src = self._write('a.src', "x\n" * 100)
        tgt = self._write('a.tgt', "y\n" * 99)
        with self.assertRaises(CorpusError) as ctx:
            list(load_parallel(src, tgt))
        self.assertIn("99 != 100", str(ctx.exception))

    def test_bytes_invalidos(self):
        src = self._write('a.src', b"bien\n\xff\xfe mal\n", mode='wb')
        tgt = self._write('a.tgt', "ok\nok\n")
        with self.assertRaises(CorpusError) as ctx:
            list(load_parallel(src, tgt))
        self.assertIn(':2:', str(ctx.exception))

    def test_archivo_inexistente(self):
        with self.assertRaises(CorpusError):
            list(load_parallel(self.dir / 'no.src', self.dir / 'no.tgt'))


class VocabularyTests(_TempDirMixin, SimpleTestCase):

    def test_dos_simbolos(self):
        vocab = build_vocab([['a', 'b', 'a']], 10)
        self.assertEqual(len(vocab), 6)
        self.assertEqual(vocab.symbols[:4], SPECIAL_SYMBOLS)
        self.assertEqual(vocab.symbols[4:], ('a', 'b'))

    def test_empates_lexicograficos(self):
        vocab = build_vocab([['z', 'm', 'a'], ['m', 'z', 'a']], 6)
        self.assertEqual(vocab.symbols[4:], ('a', 'm'))

    def test_coincide_con_conteo_directo(self):
        corpus = [['low'] * 5, ['lower'] * 2, ['lowest']]
        vocab = build_vocab(corpus, 100)
        counts = Counter(token for sentence in corpus for token in sentence)
        self.assertEqual(set(vocab.symbols[4:]), set(counts))
        self.assertEqual(vocab.symbols[4:], tuple(sorted(counts, key=lambda s: (-counts[s], s))))

    def test_tamano_minimo(self):
        with self.assertRaises(CorpusError):
            build_vocab([['a']], 4)

    def test_fuera_de_vocabulario_es_unk(self):
        vocab = build_vocab([['a']], 10)
        self.assertEqual(vocab.encode(['a', 'zz']), [4, UNK])

    def test_ida_y_vuelta_de_indices(self):
        vocab = build_vocab([['el', 'gato', 'come'], ['el', 'perro']], 20)
        tokens = ['el', 'perro', 'come']
        self.assertEqual(vocab.decode(vocab.encode(tokens)), tokens)
        self.assertEqual(vocab.decode(vocab.encode(tokens) + [EOS, 4]), tokens)

    def test_guardar_y_cargar(self):
        vocab = build_vocab([['b', 'a', 'c', 'a']], 10)
        vocab.save(self.dir / 'vocab.tsv')
        self.assertEqual(VocabularyMap.load(self.dir / 'vocab.tsv'), vocab)

    def test_indice_fuera_de_rango(self):
        with self.assertRaises(VocabularyError):
            build_vocab([['a']], 10).symbol(99)

    def test_especiales_obligatorios(self):
        with self.assertRaises(CorpusError):
            VocabularyMap(['a', 'b'])


class ToyTaskTests(_TempDirMixin, SimpleTestCase):

    def test_copia(self):
        task = generate_toy_task('copy', 50, 20, seed=1)
        self.assertTrue(all(p.src_text == p.tgt_text for p in task.train + task.test + task.ood_train))

    def test_inversion(self):
        task = generate_toy_task('reverse', 50, 20, seed=1)
        for p in task.train + task.test:
            self.assertEqual(p.tgt_text.split(), p.src_text.split()[::-1])

    def test_sin_desplazamiento_tablas_identicas(self):
        task = generate_toy_task('substitution-grammar', 30, 10, seed=2, domain_shift=0.0)
        self.assertEqual(task.ood_table, task.in_domain_table)

    def test_desplazamiento_cambia_la_tabla(self):
        task = generate_toy_task('substitution-grammar', 30, 10, vocab_size=20, seed=2, domain_shift=0.5)
        changed = [w for w in task.ood_table.mapping if task.ood_table.mapping[w] != task.in_domain_table.mapping[w]]
        self.assertEqual(len(changed), 10)
        self.assertEqual(sorted(task.ood_table.mapping.values()), sorted(task.in_domain_table.mapping.values()))

    def test_traduccion_sigue_la_tabla(self):
        task = generate_toy_task('substitution-grammar', 30, 10, seed=3)
        for p in task.test:
            self.assertEqual(task.in_domain_table.translate(p.src_text.split()), p.tgt_text.split())

    def test_determinista(self):
        first = generate_toy_task('substitution-grammar', 40, 10, seed=9, domain_shift=0.3)
        second = generate_toy_task('substitution-grammar', 40, 10, seed=9, domain_shift=0.3)
        a = first.write(self.dir / 'a')
        b = second.write(self.dir / 'b')
        for split in first.SPLITS:
            for ext in ('src', 'tgt'):
                self.assertEqual((a / f"{split}.{ext}").read_bytes(), (b / f"{split}.{ext}").read_bytes())

    def test_longitudes(self):
        task = generate_toy_task('copy', 100, 5, max_len=4, seed=0)
        self.assertEqual(len(task.ood_train), 100)
        self.assertEqual(len(task.test), 5)
        self.assertTrue(all(1 <= len(p.src_text.split()) <= 4 for p in task.ood_train))

    def test_parametros_invalidos(self):
        with self.assertRaises(ConfigurationError):
            generate_toy_task('translate', 10, 10)
        with self.assertRaises(ConfigurationError):
            generate_toy_task('copy', 0, 10)


class TextPipelineTests(SimpleTestCase):

    def setUp(self):
        self.pairs = [SentencePair("el gato come.", "the cat eats."),
                      SentencePair("el perro come", "the dog eats")]

    def test_ida_y_vuelta_sin_bpe(self):
        pipeline = TextPipeline.build(self.pairs, 50)
        encoded = pipeline.encode_pair(self.pairs[0])
        self.assertEqual(encoded.src_text, "el gato come.")
        self.assertEqual(pipeline.decode_target(encoded.tgt), "the cat eats .")

    def test_ida_y_vuelta_con_bpe(self):
        merges = learn_bpe([p.src_text for p in self.pairs] + [p.tgt_text for p in self.pairs], 20)
        pipeline = TextPipeline.build(self.pairs, 100, merges)
        encoded = pipeline.encode_pair(self.pairs[1])
        self.assertEqual(pipeline.decode_target(encoded.tgt), "the dog eats")

    def test_par_vacio(self):
        pipeline = TextPipeline.build(self.pairs, 50)
        with self.assertRaises(CorpusError):
            pipeline.encode_pair(SentencePair("el", "   "))

    def test_estadisticas(self):
        stats = corpus_statistics(self.pairs)
        self.assertEqual(stats['sentences'], 2)
        self.assertEqual(stats['src_running_words'], 7)
        self.assertEqual(stats['tgt_vocabulary'], 5)


class VocabCommandTests(_TempDirMixin, SimpleTestCase):

    def test_vocabulario_desde_archivos(self):
        src = self._write('a.txt', "el gato\nel perro\n")
        call_command('vocab', input=[str(src)], max_size=6, out_dir=str(self.dir / 'out'), stdout=StringIO())
        vocab = VocabularyMap.load(self.dir / 'out' / 'vocab.tsv')
        self.assertEqual(vocab.symbols[4:], ('el', 'gato'))
