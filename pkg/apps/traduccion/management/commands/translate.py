import logging

from apps.corpus.pipeline import TextPipeline
from apps.corpus.reader import read_lines, write_lines
from apps.traduccion.checkpoint import Checkpoint
from apps.traduccion.model import AttentionalModel
from config.commands import WorkbenchCommand

logger = logging.getLogger(__name__)


class Command(WorkbenchCommand):
    help = 'Traduce un archivo fuente con un checkpoint congelado (búsqueda en haz).'
    path_keys = ('checkpoint', 'input', 'output')
    required = ('checkpoint', 'input')

    def schema(self):
        return {
            'checkpoint': ('str', None),
            'input': ('str', None),
            'output': ('str', None),
            'beam_size': ('int', None),
            'max_output_length': ('int', None),
        }

    def add_command_arguments(self, parser):
        parser.add_argument('--checkpoint')
        parser.add_argument('--input', help='texto fuente, una oración por línea')
        parser.add_argument('--output', help='por defecto <out-dir>/translations.txt')
        parser.add_argument('--beam-size', type=int)
        parser.add_argument('--max-output-length', type=int)

    def run(self, values, out_dir):
        checkpoint = Checkpoint.load(values['checkpoint'])
        pipeline = TextPipeline.from_checkpoint(checkpoint)
        model = AttentionalModel(checkpoint.config)
        translations = []
        for _, text in read_lines(values['input']):
            src = pipeline.encode_source(text)
            if not src:
                translations.append('')
                continue
            hyp = model.beam_search(src, checkpoint.params, values['beam_size'], values['max_output_length'])
            translations.append(pipeline.decode_target(hyp.tokens))
        output = values['output'] or out_dir / 'translations.txt'
        write_lines(output, translations)
        logger.info("%d oraciones traducidas", len(translations))
        self.emit(f"{len(translations)} traducciones → {output}")
        return {'sentences': len(translations)}
