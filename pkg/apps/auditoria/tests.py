import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from .utils import BITACORA_NAME, log_action, read_bitacora


class LogActionTests(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.dir = Path(self.tmp.name)

    def tearDown(self):
        self.tmp.cleanup()

    def test_agrega_una_linea_por_accion(self):
        log_action('train', objeto='checkpoint.npz', extra={'updates': 10}, out_dir=self.dir)
        log_action('adapt', out_dir=self.dir)
        registros = read_bitacora(self.dir)
        self.assertEqual([r['accion'] for r in registros], ['train', 'adapt'])
        self.assertEqual(registros[0]['extra'], {'updates': 10})
        self.assertEqual(registros[0]['objeto'], 'checkpoint.npz')
        self.assertIsNone(registros[1]['objeto'])
        self.assertIn('version', registros[0])

    def test_error_de_escritura_no_aborta(self):
        blocker = self.dir / 'archivo'
        blocker.write_text('x', encoding='utf-8')
        with self.assertLogs('apps.auditoria.utils', level='ERROR'):
            self.assertIsNone(log_action('train', out_dir=blocker / 'sub'))

    def test_bitacora_inexistente(self):
        self.assertEqual(read_bitacora(self.dir / 'nada'), [])
        self.assertFalse((self.dir / BITACORA_NAME).exists())
