from django.conf import settings

from apps.corpus.pipeline import TextPipeline
from apps.corpus.reader import load_parallel
from apps.optimizadores.state import GRADIENT_ALGORITHMS
from apps.simulacion.scenarios import split_dev
from apps.simulacion.training import train_offline
from apps.subpalabras.bpe import MergeTable, learn_bpe
from apps.traduccion.checkpoint import Checkpoint
from apps.traduccion.configuracion import ModelConfig
from config.commands import (WorkbenchCommand, add_model_arguments, add_training_arguments, model_overrides,
                             model_schema, training_config, training_schema)


class Command(WorkbenchCommand):
    help = 'Entrenamiento offline con parada temprana por BLEU de desarrollo; escribe <out-dir>/checkpoint.npz.'
    path_keys = ('train_src', 'train_tgt', 'dev_src', 'dev_tgt', 'init', 'merges')
    required = ('train_src', 'train_tgt')

    def schema(self):
        schema = {
            'train_src': ('str', None),
            'train_tgt': ('str', None),
            'dev_src': ('str', None),
            'dev_tgt': ('str', None),
            'init': ('str', None),
            'merges': ('str', None),
            'bpe_merges': ('int', 0),
            'vocab_size': ('int', settings.CORPUS_DEFAULTS['vocab_size']),
            'optimizer': ('str', settings.TRAINING_DEFAULTS['optimizer']),
            'lr': ('float', None),
            'clip_norm': ('float', None),
        }
        schema.update(model_schema())
        schema.update(training_schema())
        return schema

    def add_command_arguments(self, parser):
        parser.add_argument('--train-src')
        parser.add_argument('--train-tgt')
        parser.add_argument('--dev-src')
        parser.add_argument('--dev-tgt')
        parser.add_argument('--init', help='checkpoint desde el que continuar (ajuste fino)')
        parser.add_argument('--merges', help='tabla BPE existente')
        parser.add_argument('--bpe-merges', type=int, help='aprende una tabla BPE con N fusiones (0 = sin BPE)')
        parser.add_argument('--vocab-size', type=int)
        parser.add_argument('--optimizer', choices=GRADIENT_ALGORITHMS)
        parser.add_argument('--lr', type=float)
        parser.add_argument('--clip-norm', type=float)
        add_model_arguments(parser)
        add_training_arguments(parser)

    def run(self, values, out_dir):
        train = list(load_parallel(values['train_src'], values['train_tgt']))
        dev = list(load_parallel(values['dev_src'], values['dev_tgt'])) if values['dev_src'] else []
        train, dev = split_dev(train, dev, 'entrenamiento')

        init, config = None, None
        if values['init']:
            init = Checkpoint.load(values['init'])
            pipeline = TextPipeline.from_checkpoint(init)
        else:
            merges = MergeTable.load(values['merges']) if values['merges'] else None
            if merges is None and values['bpe_merges']:
                merges = learn_bpe([p.src_text for p in train] + [p.tgt_text for p in train], values['bpe_merges'])
            pipeline = TextPipeline.build(train, values['vocab_size'], merges)
            config = ModelConfig.from_settings(len(pipeline.src_vocab), len(pipeline.tgt_vocab),
                                               seed=values['seed'], **model_overrides(values))

        training = training_config(values, values['optimizer'], values['lr'], values['clip_norm'])
        checkpoint = train_offline(config, pipeline.encode_pairs(train), pipeline.encode_pairs(dev),
                                   training, init=init, pipeline=pipeline)
        path = out_dir / 'checkpoint.npz'
        checkpoint.save(path)
        self.emit(f"{checkpoint.meta['updates']} actualizaciones, mejor BLEU dev "
                  f"{checkpoint.meta['dev_bleu'] or 0.0:.2f} → {path}")
        return {key: checkpoint.meta[key] for key in ('updates', 'best_update', 'dev_bleu', 'diverged')}
