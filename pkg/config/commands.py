"""Base común de los comandos del banco (flags --config, --out-dir y --seed)."""

import logging
from pathlib import Path

from django.conf import settings
from django.core.management.base import BaseCommand, CommandError

from apps.auditoria.utils import log_action
from apps.optimizadores.learner import OptimizerSpec
from apps.simulacion.training import TrainingConfig
from .exceptions import ConfigurationError, WorkbenchError
from .runconfig import MODEL_KEYS, RunConfig, resolve_options

logger = logging.getLogger('apps.commands')

OPTIMIZER_CHOICES = ('none', 'sgd', 'adagrad', 'adadelta', 'adam', 'pas', 'ppas')


def model_schema():
    """Flags del modelo; None deja el valor de MODEL_DEFAULTS."""
    return {
        'embedding_dim': ('int', None),
        'hidden_dim': ('int', None),
        'attention_dim': ('int', None),
        'deep_output_dim': ('int', None),
        'weight_noise_sigma': ('float', None),
        'beam_size': ('int', None),
        'max_output_length': ('int', None),
        'dtype': ('str', None),
    }


def optimizer_schema(default=None, multiple=False):
    return {
        'optimizer': ('list' if multiple else 'str', default),
        'lr': ('float', None),
        'C': ('float', None),
        'k_max': ('int', None),
        'clip_norm': ('float', None),
        'ppas_true_projection': ('bool', False),
    }


def training_schema():
    return {
        'eval_every': ('int', None),
        'patience': ('int', None),
        'max_updates': ('int', None),
        'dev_beam_size': ('int', None),
    }


def add_model_arguments(parser):
    group = parser.add_argument_group('modelo')
    for flag in ('--embedding-dim', '--hidden-dim', '--attention-dim', '--deep-output-dim',
                 '--beam-size', '--max-output-length'):
        group.add_argument(flag, type=int)
    group.add_argument('--weight-noise-sigma', type=float)
    group.add_argument('--dtype', choices=('float32', 'float64'))


def add_optimizer_arguments(parser, multiple=False, choices=OPTIMIZER_CHOICES):
    group = parser.add_argument_group('optimizador')
    if multiple:
        group.add_argument('--optimizer', nargs='+', choices=choices)
    else:
        group.add_argument('--optimizer', choices=choices)
    group.add_argument('--lr', type=float)
    group.add_argument('--C', type=float)
    group.add_argument('--k-max', type=int)
    group.add_argument('--clip-norm', type=float)
    group.add_argument('--ppas-true-projection', action='store_true', default=None)


def add_training_arguments(parser):
    group = parser.add_argument_group('entrenamiento offline')
    for flag in ('--eval-every', '--patience', '--max-updates', '--dev-beam-size'):
        group.add_argument(flag, type=int)


def model_overrides(values):
    return {key: values[key] for key in MODEL_KEYS if values.get(key) is not None}


def optimizer_spec(name, values):
    return OptimizerSpec.from_settings(
        name, lr=values.get('lr'), C=values.get('C'), k_max=values.get('k_max'),
        clip_norm=values.get('clip_norm'), true_projection=values.get('ppas_true_projection') or None,
    )


def training_config(values, optimizer=None, lr=None, clip_norm=None):
    """TrainingConfig desde las opciones resueltas; None deja TRAINING_DEFAULTS."""
    return TrainingConfig.from_settings(
        optimizer=optimizer, lr=lr, clip_norm=clip_norm,
        eval_every=values.get('eval_every'), patience=values.get('patience'),
        max_updates=values.get('max_updates'), dev_beam_size=values.get('dev_beam_size'),
        seed=values.get('seed'),
    )


class WorkbenchCommand(BaseCommand):
    """
    Cada subclase define `schema()` ({clave: (tipo, defecto)}), sus flags en
    `add_command_arguments` y el trabajo en `run(values, out_dir)`.

    Los WorkbenchError y OSError se convierten en CommandError (una línea en
    stderr, código de salida distinto de cero).
    """
    path_keys = ()
    required = ()

    @property
    def command_name(self):
        return self.__module__.rsplit('.', 1)[-1]

    def schema(self):
        return {}

    def add_command_arguments(self, parser):
        pass

    def add_arguments(self, parser):
        parser.add_argument('--config', help='archivo key=value con opciones')
        parser.add_argument('--out-dir', help='directorio de salida (por defecto OLNMT_OUT_DIR)')
        parser.add_argument('--seed', type=int)
        self.add_command_arguments(parser)

    def resolve(self, options):
        schema = dict(self.schema())
        schema['out_dir'] = ('str', str(settings.WORKBENCH_OUT_DIR))
        schema['seed'] = ('int', 0)
        values = resolve_options(schema, options, options.get('config'))
        missing = [key for key in self.required if values.get(key) in (None, [], '')]
        if missing:
            flags = ', '.join('--' + key.replace('_', '-') for key in missing)
            raise ConfigurationError(f"{self.command_name}: faltan opciones obligatorias: {flags}")
        return values

    def handle(self, *args, **options):
        try:
            values = self.resolve(options)
            out_dir = Path(values['out_dir'])
            run_config = RunConfig.from_options(self.command_name, values, self.path_keys)
            run_config.write(out_dir)
            result = self.run(values, out_dir)
            log_action(self.command_name, objeto=str(out_dir), extra=result, out_dir=out_dir)
        except (WorkbenchError, OSError) as exc:
            logger.error("%s: %s", self.command_name, exc)
            raise CommandError(str(exc))

    def run(self, values, out_dir):
        raise NotImplementedError

    def emit(self, text):
        self.stdout.write(text)
