from django.conf import settings

from apps.corpus.reader import read_lines
from apps.subpalabras.bpe import learn_bpe
from config.commands import WorkbenchCommand


class Command(WorkbenchCommand):
    help = 'Aprende una tabla BPE conjunta sobre uno o más archivos de texto (fuente y destino).'
    path_keys = ('input', 'output')
    required = ('input',)

    def schema(self):
        return {
            'input': ('list', None),
            'output': ('str', None),
            'num_merges': ('int', settings.BPE_DEFAULTS['num_merges']),
            'min_frequency': ('int', settings.BPE_DEFAULTS['min_frequency']),
        }

    def add_command_arguments(self, parser):
        parser.add_argument('--input', nargs='+', help='archivos de texto, una oración por línea')
        parser.add_argument('--output', help='tabla de salida (por defecto <out-dir>/merges.txt)')
        parser.add_argument('--num-merges', type=int)
        parser.add_argument('--min-frequency', type=int)

    def run(self, values, out_dir):
        sentences = [text for path in values['input'] for _, text in read_lines(path)]
        table = learn_bpe(sentences, values['num_merges'], values['min_frequency'])
        output = values['output'] or out_dir / 'merges.txt'
        table.save(output)
        self.emit(f"{len(table)} fusiones → {output}")
        return {'merges': len(table), 'fingerprint': table.fingerprint}
