from pathlib import Path

from apps.corpus.reader import read_lines, write_lines
from apps.subpalabras.bpe import MergeTable, apply_bpe
from config.commands import WorkbenchCommand


class Command(WorkbenchCommand):
    help = 'Segmenta un archivo de texto con una tabla BPE.'
    path_keys = ('merges', 'input', 'output')
    required = ('merges', 'input')

    def schema(self):
        return {'merges': ('str', None), 'input': ('str', None), 'output': ('str', None)}

    def add_command_arguments(self, parser):
        parser.add_argument('--merges', help='tabla BPE (bpe_learn)')
        parser.add_argument('--input')
        parser.add_argument('--output', help='por defecto <out-dir>/<input>.bpe')

    def run(self, values, out_dir):
        table = MergeTable.load(values['merges'])
        lines = [" ".join(apply_bpe(text, table)) for _, text in read_lines(values['input'])]
        output = values['output'] or out_dir / (Path(values['input']).name + '.bpe')
        write_lines(output, lines)
        self.emit(f"{len(lines)} líneas segmentadas → {output}")
        return {'lines': len(lines)}
