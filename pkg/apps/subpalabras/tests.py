import tempfile
from io import StringIO
from pathlib import Path

from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from config.exceptions import CorpusError
from .bpe import END_OF_WORD, MergeTable, apply_bpe, coverage, learn_bpe, restore
from .tokenizer import detokenize, tokenize

TOY_CORPUS = [['low'] * 5, ['lower'] * 2, ['lowest']]


class TokenizerTests(SimpleTestCase):

    def test_separa_puntuacion(self):
        self.assertEqual(tokenize("Hola, mundo!"), ['Hola', ',', 'mundo', '!'])

    def test_conserva_apostrofos_y_mayusculas(self):
        self.assertEqual(tokenize("It's Paris"), ["It's", 'Paris'])

    def test_detokenize(self):
        self.assertEqual(detokenize(['a', 'b']), 'a b')


class LearnBpeTests(SimpleTestCase):

    def test_fusiones_del_corpus_de_juguete(self):
        table = learn_bpe(TOY_CORPUS, 10)
        self.assertEqual(table.merges, (
            ('l', 'o'),
            ('lo', 'w' + END_OF_WORD),
            ('lo', 'w'),
            ('low', 'e'),
            ('lowe', 'r' + END_OF_WORD),
        ))

    def test_segmentacion(self):
        table = learn_bpe(TOY_CORPUS, 10)
        self.assertEqual(list(table.segment_word('lowest')), ['lowe', 's', 't' + END_OF_WORD])
        self.assertEqual(list(table.segment_word('low')), ['low' + END_OF_WORD])

    def test_numero_de_fusiones_acotado(self):
        self.assertEqual(len(learn_bpe(TOY_CORPUS, 2)), 2)
        self.assertEqual(len(learn_bpe(TOY_CORPUS, 0)), 0)

    def test_corpus_vacio(self):
        with self.assertRaises(CorpusError):
            learn_bpe([], 10)

    def test_determinista(self):
        corpus = ["el gato come pescado", "el perro come carne", "los gatos comen"]
        first, second = learn_bpe(corpus, 30), learn_bpe(list(reversed(corpus)), 30)
        self.assertEqual(first, second)
        self.assertEqual(first.fingerprint, second.fingerprint)

    def test_ida_y_vuelta(self):
        corpus = ["el gato come pescado", "el perro come carne", "los gatos comen, ¿verdad?"]
        table = learn_bpe(corpus, 25)
        for sentence in corpus + ["una oración nueva gatuna"]:
            self.assertEqual(restore(apply_bpe(sentence, table)), tokenize(sentence))

    def test_memoizacion(self):
        table = learn_bpe(TOY_CORPUS, 10)
        self.assertIs(table.segment_word('lowest'), table.segment_word('lowest'))


class MergeTableTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_archivo_ida_y_vuelta(self):
        table = learn_bpe(TOY_CORPUS, 10)
        table.save(self.dir / 'merges.txt')
        loaded = MergeTable.load(self.dir / 'merges.txt')
        self.assertEqual(loaded, table)
        self.assertEqual(loaded.fingerprint, table.fingerprint)

    def test_cabecera_faltante(self):
        path = self.dir / 'merges.txt'
        path.write_text("l o\n", encoding='utf-8')
        with self.assertRaises(CorpusError):
            MergeTable.load(path)

    def test_version_no_soportada(self):
        path = self.dir / 'merges.txt'
        path.write_text("#version: 7 fingerprint=x\nl o\n", encoding='utf-8')
        with self.assertRaises(CorpusError):
            MergeTable.load(path)

    def test_fusion_duplicada(self):
        with self.assertRaises(CorpusError):
            MergeTable([('a', 'b'), ('a', 'b')])


class CoverageTests(SimpleTestCase):

    def test_casos(self):
        self.assertEqual(coverage([['a', 'b'], ['c']], {'a', 'b', 'c'}), 1.0)
        self.assertEqual(coverage([['a', 'x']], {'a'}), 0.5)
        self.assertEqual(coverage([], {'a'}), 0.0)

    def test_subpalabras_cubren_el_corpus_de_entrenamiento(self):
        table = learn_bpe(TOY_CORPUS, 10)
        segmented = [table.apply(sentence) for sentence in TOY_CORPUS]
        vocab = {piece for sentence in segmented for piece in sentence}
        self.assertEqual(coverage(segmented, vocab), 1.0)


class BpeCommandTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)
        self.corpus = self.dir / 'corpus.txt'
        self.corpus.write_text("\n".join(" ".join(s) for s in TOY_CORPUS) + "\n", encoding='utf-8')

    def tearDown(self):
        self.tmp.cleanup()

    def test_aprender_y_aplicar(self):
        out = self.dir / 'out'
        call_command('bpe_learn', input=[str(self.corpus)], num_merges=10, out_dir=str(out), stdout=StringIO())
        table = MergeTable.load(out / 'merges.txt')
        self.assertEqual(table, learn_bpe(TOY_CORPUS, 10))
        self.assertTrue((out / 'run_config.json').exists())

        held_out = self.dir / 'nuevo.txt'
        held_out.write_text("lowest low\n", encoding='utf-8')
        call_command('bpe_apply', merges=str(out / 'merges.txt'), input=str(held_out), out_dir=str(out),
                     stdout=StringIO())
        self.assertEqual((out / 'nuevo.txt.bpe').read_text(encoding='utf-8'),
                         f"lowe s t{END_OF_WORD} low{END_OF_WORD}\n")

    def test_entrada_obligatoria(self):
        with self.assertRaisesMessage(CommandError, '--input'):
            call_command('bpe_learn', out_dir=str(self.dir / 'out'), stdout=StringIO())

    def test_tabla_inexistente(self):
        with self.assertRaises(CommandError):
            call_command('bpe_apply', merges=str(self.dir / 'no.txt'), input=str(self.corpus),
                         out_dir=str(self.dir / 'out'), stdout=StringIO())
