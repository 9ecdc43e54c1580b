from django.conf import settings

from apps.corpus.toy import TOY_KINDS
from apps.simulacion.scenarios import ScenarioSpec, run_scenario, scenario_report
from config.commands import (WorkbenchCommand, add_model_arguments, add_optimizer_arguments, add_training_arguments,
                             model_overrides, model_schema, optimizer_schema, optimizer_spec, training_config,
                             training_schema)
from config.exceptions import ConfigurationError

CORPORA = ('ood_train', 'ood_dev', 'in_train', 'in_dev', 'test')
ONLINE_OPTIMIZERS = ['sgd', 'adagrad', 'adadelta', 'adam', 'pas', 'ppas']


def _paths(values, name):
    src, tgt = values[f'{name}_src'], values[f'{name}_tgt']
    if (src is None) != (tgt is None):
        raise ConfigurationError(f"--{name.replace('_', '-')}-src y --{name.replace('_', '-')}-tgt van juntos")
    return (src, tgt) if src is not None else None


class Command(WorkbenchCommand):
    help = ('Ejecuta un escenario de adaptación (1: fuera de dominio, 2: más ajuste fino, 3: solo dominio) '
            'y compara la línea base offline con cada optimizador en línea.')
    path_keys = tuple(f'{name}_{side}' for name in CORPORA for side in ('src', 'tgt'))
    required = ('id',)

    def schema(self):
        schema = {f'{name}_{side}': ('str', None) for name in CORPORA for side in ('src', 'tgt')}
        schema.update({
            'id': ('int', None),
            'toy': ('str', None),
            'toy_train': ('int', 5000),
            'toy_in_train': ('int', None),
            'toy_test': ('int', 1000),
            'toy_vocab': ('int', 20),
            'toy_max_len': ('int', 8),
            'domain_shift': ('float', 0.0),
            'bpe_merges': ('int', 0),
            'vocab_size': ('int', settings.CORPUS_DEFAULTS['vocab_size']),
            'bootstrap_samples': ('int', settings.METRIC_DEFAULTS['bootstrap_samples']),
        })
        schema.update(model_schema())
        schema.update(training_schema())
        schema.update(optimizer_schema(default=list(ONLINE_OPTIMIZERS), multiple=True))
        return schema

    def add_command_arguments(self, parser):
        parser.add_argument('--id', type=int, choices=(1, 2, 3))
        corpora = parser.add_argument_group('corpus')
        for name in CORPORA:
            for side in ('src', 'tgt'):
                corpora.add_argument(f"--{name.replace('_', '-')}-{side}")
        toy = parser.add_argument_group('tarea de juguete (sin rutas de corpus)')
        toy.add_argument('--toy', choices=TOY_KINDS)
        for flag in ('--toy-train', '--toy-in-train', '--toy-test', '--toy-vocab', '--toy-max-len'):
            toy.add_argument(flag, type=int)
        toy.add_argument('--domain-shift', type=float)
        parser.add_argument('--bpe-merges', type=int)
        parser.add_argument('--vocab-size', type=int)
        parser.add_argument('--bootstrap-samples', type=int)
        add_model_arguments(parser)
        add_training_arguments(parser)
        add_optimizer_arguments(parser, multiple=True)

    def run(self, values, out_dir):
        overrides = model_overrides(values)
        beam_size = overrides.get('beam_size')
        spec = ScenarioSpec(
            scenario=values['id'],
            optimizers=tuple(optimizer_spec(name, values) for name in values['optimizer']),
            model_overrides=overrides,
            training=training_config(values),
            bpe_merges=values['bpe_merges'],
            vocab_size=values['vocab_size'],
            beam_size=beam_size,
            bootstrap_samples=values['bootstrap_samples'],
            seed=values['seed'],
            toy_kind=values['toy'],
            toy_train=values['toy_train'],
            toy_in_train=values['toy_in_train'],
            toy_test=values['toy_test'],
            toy_vocab=values['toy_vocab'],
            toy_max_len=values['toy_max_len'],
            domain_shift=values['domain_shift'],
            **{name: _paths(values, name) for name in CORPORA},
        )
        result = run_scenario(spec, out_dir)
        self.emit(scenario_report(result))
        return {'scenario': spec.scenario, 'effective_scenario': result.effective_scenario, 'best': result.best}
