import json
import tempfile
from io import StringIO
from pathlib import Path

from django.conf import settings
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import SimpleTestCase

from apps.auditoria.utils import read_bitacora
from apps.corpus.toy import generate_toy_task
from apps.simulacion.trace import load_trace
from .commands import optimizer_spec
from .exceptions import ConfigurationError
from .runconfig import RUN_CONFIG_NAME, RunConfig, load_config_file, resolve_options

TINY_FLAGS = dict(embedding_dim=8, hidden_dim=8, attention_dim=8, deep_output_dim=8,
                  weight_noise_sigma=0.0, beam_size=2, max_output_length=6)


class _TempDirMixin:

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def _config_file(self, text, name='run.cfg'):
        path = self.dir / name
        path.write_text(text, encoding='utf-8')
        return path


class ResolveOptionsTests(_TempDirMixin, SimpleTestCase):

    SCHEMA = {'lr': ('float', 1.0), 'k_max': ('int', 10), 'optimizer': ('str', 'adam'),
              'ppas_true_projection': ('bool', False), 'traces': ('list', None)}

    def test_precedencia(self):
        path = self._config_file("lr=0.5\nk_max=3\n")
        values = resolve_options(self.SCHEMA, {'lr': 0.25, 'k_max': None}, path)
        self.assertEqual(values['lr'], 0.25)
        self.assertEqual(values['k_max'], 3)
        self.assertEqual(values['optimizer'], 'adam')

    def test_tipos_desde_archivo(self):
        path = self._config_file("ppas_true_projection=true\ntraces=a.jsonl b.jsonl\n")
        values = resolve_options(self.SCHEMA, {}, path)
        self.assertIs(values['ppas_true_projection'], True)
        self.assertEqual(values['traces'], ['a.jsonl', 'b.jsonl'])

    def test_guiones_en_las_claves(self):
        self.assertEqual(load_config_file(self._config_file("k-max=4\n")), {'k_max': '4'})

    def test_clave_desconocida(self):
        with self.assertRaises(ConfigurationError):
            resolve_options(self.SCHEMA, {}, self._config_file("momentum=0.9\n"))

    def test_valor_invalido(self):
        with self.assertRaises(ConfigurationError):
            resolve_options(self.SCHEMA, {}, self._config_file("k_max=diez\n"))

    def test_archivo_inexistente(self):
        with self.assertRaises(ConfigurationError):
            resolve_options(self.SCHEMA, {}, self.dir / 'no.cfg')

    def test_hiperparametros_por_defecto_desde_archivo(self):
        schema = {'optimizer': ('str', None), 'lr': ('float', None), 'C': ('float', None),
                  'k_max': ('int', None), 'clip_norm': ('float', None), 'ppas_true_projection': ('bool', False)}
        expected = {'sgd': (1e-3, None), 'adagrad': (1e-4, None), 'adadelta': (1e-1, None),
                    'adam': (1e-3, None), 'pas': (1.0, 1e-2), 'ppas': (1e-2, 1e-2)}
        for name, (lr, C) in expected.items():
            lines = f"optimizer={name}\nlr={lr}\n" + (f"C={C}\n" if C is not None else "")
            values = resolve_options(schema, {}, self._config_file(lines, f"{name}.cfg"))
            spec = optimizer_spec(values['optimizer'], values)
            self.assertEqual((spec.name, spec.lr, spec.C), (name, lr, C))
            self.assertEqual(spec.k_max, 10)
            self.assertEqual(spec.clip_norm, 1.0)
            self.assertEqual(settings.OPTIMIZER_DEFAULTS[name]['lr'], lr)


class RunConfigTests(_TempDirMixin, SimpleTestCase):

    def test_reparto_y_version(self):
        resolved = {'out_dir': str(self.dir), 'seed': 3, 'test_src': 'a.src', 'hidden_dim': 8,
                    'optimizer': 'ppas', 'C': 0.01, 'bootstrap_samples': 100, 'config': None}
        run_config = RunConfig.from_options('adapt', resolved, path_keys=('test_src',))
        data = json.loads(run_config.write().read_text(encoding='utf-8'))
        self.assertEqual(data['version'], settings.WORKBENCH_VERSION)
        self.assertEqual(data['paths'], {'test_src': 'a.src'})
        self.assertEqual(data['model'], {'hidden_dim': 8})
        self.assertEqual(data['optimizer'], {'optimizer': 'ppas', 'C': 0.01})
        self.assertEqual(data['options'], {'bootstrap_samples': 100})
        self.assertEqual(data['seed'], 3)


class CommandPipelineTests(_TempDirMixin, SimpleTestCase):
    """train → translate → adapt → plot_data sobre una tarea de copia diminuta."""

    def setUp(self):
        super().setUp()
        self.data = generate_toy_task('copy', 20, 6, vocab_size=5, max_len=3, seed=0).write(self.dir / 'data')
        self.out = self.dir / 'out'

    def _call(self, name, *args, **options):
        stdout = StringIO()
        call_command(name, *args, stdout=stdout, **options)
        return stdout.getvalue()

    def _train(self):
        self._call('train', train_src=str(self.data / 'ood_train.src'), train_tgt=str(self.data / 'ood_train.tgt'),
                   dev_src=str(self.data / 'ood_dev.src'), dev_tgt=str(self.data / 'ood_dev.tgt'),
                   eval_every=5, patience=0, max_updates=5, out_dir=str(self.out / 'train'), **TINY_FLAGS)
        return self.out / 'train' / 'checkpoint.npz'

    def test_train_escribe_checkpoint_config_y_bitacora(self):
        checkpoint = self._train()
        self.assertTrue(checkpoint.exists())
        run_config = json.loads((self.out / 'train' / RUN_CONFIG_NAME).read_text(encoding='utf-8'))
        self.assertEqual(run_config['command'], 'train')
        self.assertEqual(run_config['version'], settings.WORKBENCH_VERSION)
        self.assertEqual(run_config['model']['hidden_dim'], 8)
        self.assertEqual([r['accion'] for r in read_bitacora(self.out / 'train')], ['train'])

    def test_adapt_none_igual_a_translate(self):
        checkpoint = str(self._train())
        self._call('translate', checkpoint=checkpoint, input=str(self.data / 'test.src'),
                   out_dir=str(self.out / 'translate'))
        self._call('adapt', checkpoint=checkpoint, test_src=str(self.data / 'test.src'),
                   test_tgt=str(self.data / 'test.tgt'), optimizer='none', bootstrap_samples=20,
                   out_dir=str(self.out / 'adapt'))
        self.assertEqual((self.out / 'translate' / 'translations.txt').read_text(encoding='utf-8'),
                         (self.out / 'adapt' / 'translations.txt').read_text(encoding='utf-8'))
        self.assertEqual(len(load_trace(self.out / 'adapt' / 'traces' / 'none.jsonl')), 6)

    def test_adapt_y_plot_data(self):
        checkpoint = str(self._train())
        for optimizer in ('none', 'ppas'):
            output = self._call('adapt', checkpoint=checkpoint, test_src=str(self.data / 'test.src'),
                                test_tgt=str(self.data / 'test.tgt'), optimizer=optimizer, bootstrap_samples=20,
                                out_dir=str(self.out / 'adapt'))
            self.assertIn('65 ms', output)
        traces = self.out / 'adapt' / 'traces'
        self._call('plot_data', baseline=str(traces / 'none.jsonl'), traces=[str(traces / 'ppas.jsonl')],
                   out_dir=str(self.out / 'plot'))
        lines = (self.out / 'plot' / 'plot_data.tsv').read_text(encoding='utf-8').splitlines()
        self.assertEqual(lines[0], 'n\tppas')
        self.assertEqual(len(lines), 7)

    def test_adapt_toma_el_optimizador_del_archivo(self):
        checkpoint = str(self._train())
        config = self._config_file("optimizer=pas\nC=0.05\nbootstrap_samples=20\n")
        self._call('adapt', config=str(config), checkpoint=checkpoint, test_src=str(self.data / 'test.src'),
                   test_tgt=str(self.data / 'test.tgt'), out_dir=str(self.out / 'adapt'))
        run_config = json.loads((self.out / 'adapt' / RUN_CONFIG_NAME).read_text(encoding='utf-8'))
        self.assertEqual(run_config['optimizer']['optimizer'], 'pas')
        self.assertEqual(run_config['optimizer']['C'], 0.05)
        self.assertTrue((self.out / 'adapt' / 'traces' / 'pas.jsonl').exists())

    def test_adapt_sin_optimizador(self):
        with self.assertRaisesMessage(CommandError, '--optimizer'):
            self._call('adapt', checkpoint='x.npz', test_src='a', test_tgt='b', out_dir=str(self.out))

    def test_checkpoint_inexistente(self):
        with self.assertRaises(CommandError):
            self._call('translate', checkpoint=str(self.dir / 'no.npz'), input=str(self.data / 'test.src'),
                       out_dir=str(self.out))

    def test_optimizador_invalido(self):
        with self.assertRaises(CommandError):
            self._call('adapt', '--optimizer', 'momentum', '--checkpoint', 'x.npz', '--out-dir', str(self.out))

    def test_escenario_tres_con_adadelta(self):
        output = self._call('scenario', id=3, toy='copy', toy_train=20, toy_test=6, toy_vocab=5, toy_max_len=3,
                            optimizer=['adadelta'], eval_every=5, patience=0, max_updates=5,
                            bootstrap_samples=20, out_dir=str(self.out / 'scenario'), **TINY_FLAGS)
        self.assertIn('Escenario 3', output)
        self.assertIn('adadelta', output)
        self.assertTrue((self.out / 'scenario' / 'traces' / 'adadelta.jsonl').exists())
        self.assertTrue((self.out / 'scenario' / 'checkpoint.npz').exists())

    def test_escenario_sin_corpus(self):
        with self.assertRaises(CommandError):
            self._call('scenario', id=1, out_dir=str(self.out))
