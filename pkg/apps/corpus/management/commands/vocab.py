from django.conf import settings

from apps.corpus.reader import read_lines
from apps.corpus.vocabulary import build_vocab
from apps.subpalabras.bpe import MergeTable
from apps.subpalabras.tokenizer import tokenize
from config.commands import WorkbenchCommand


class Command(WorkbenchCommand):
    help = 'Construye un vocabulario (especiales + símbolos por frecuencia) desde archivos de texto.'
    path_keys = ('input', 'merges', 'output')
    required = ('input',)

    def schema(self):
        return {
            'input': ('list', None),
            'merges': ('str', None),
            'output': ('str', None),
            'max_size': ('int', settings.CORPUS_DEFAULTS['vocab_size']),
        }

    def add_command_arguments(self, parser):
        parser.add_argument('--input', nargs='+')
        parser.add_argument('--merges', help='tabla BPE opcional para segmentar antes de contar')
        parser.add_argument('--output', help='por defecto <out-dir>/vocab.tsv')
        parser.add_argument('--max-size', type=int)

    def run(self, values, out_dir):
        table = MergeTable.load(values['merges']) if values['merges'] else None

        def sentences():
            for path in values['input']:
                for _, text in read_lines(path):
                    tokens = tokenize(text)
                    yield table.apply(tokens) if table is not None else tokens

        vocab = build_vocab(sentences(), values['max_size'])
        output = values['output'] or out_dir / 'vocab.tsv'
        vocab.save(output)
        self.emit(f"{len(vocab)} símbolos → {output}")
        return {'size': len(vocab)}
