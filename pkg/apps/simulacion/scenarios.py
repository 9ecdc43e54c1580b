"""
Orquestación de los tres escenarios de adaptación:

1. solo corpus externo (fuera de dominio)
2. corpus externo y ajuste fino con datos del dominio
3. solo datos del dominio

En todos los casos el sistema offline resultante es la línea base y cada
optimizador en línea se simula sobre el mismo conjunto de prueba.
"""

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

from apps.corpus.pipeline import TextPipeline
from apps.corpus.reader import load_parallel
from apps.corpus.toy import generate_toy_task
from apps.optimizadores.learner import OptimizerSpec
from apps.reportes.informe import compare_systems, evaluate, render_jsonl, render_text
from apps.subpalabras.bpe import learn_bpe
from apps.traduccion.configuracion import ModelConfig
from config.exceptions import ConfigurationError, CorpusError
from .resultados import emit_trajectory_plot_data, measure_update_time, write_plot_data
from .session import run_online_session
from .training import TrainingConfig, train_offline

logger = logging.getLogger(__name__)

SCENARIOS = (1, 2, 3)
BASELINE_NAME = 'offline'


@dataclass
class ScenarioSpec:
    """
    Los corpus son pares de rutas (fuente, destino). Sin rutas se usa una
    tarea de juguete (`toy_kind`) generada con `seed`.
    """
    scenario: int
    ood_train: tuple = None
    ood_dev: tuple = None
    in_train: tuple = None
    in_dev: tuple = None
    test: tuple = None
    optimizers: tuple = ()
    model_overrides: dict = field(default_factory=dict)
    training: TrainingConfig = None
    bpe_merges: int = 0
    vocab_size: int = 1000
    beam_size: int = None
    bootstrap_samples: int = None
    seed: int = 0
    toy_kind: str = None
    toy_train: int = 5000
    toy_in_train: int = None
    toy_test: int = 1000
    toy_vocab: int = 20
    toy_max_len: int = 8
    domain_shift: float = 0.0

    def __post_init__(self):
        if self.scenario not in SCENARIOS:
            raise ConfigurationError(f"escenario desconocido: {self.scenario!r} (opciones: 1, 2, 3)")
        self.optimizers = tuple(
            o if isinstance(o, OptimizerSpec) else OptimizerSpec.from_settings(o) for o in self.optimizers
        )
        self.training = self.training or TrainingConfig.from_settings(seed=self.seed)
        if self.toy_kind is not None:
            if any(getattr(self, name) for name in ('ood_train', 'ood_dev', 'in_train', 'in_dev', 'test')):
                raise ConfigurationError("no se pueden combinar rutas de corpus con una tarea de juguete")
            return
        if self.test is None:
            raise ConfigurationError(f"escenario {self.scenario}: falta el corpus de prueba")
        if self.scenario == 1 and self.in_train is not None:
            raise ConfigurationError("escenario 1: no admite datos de entrenamiento del dominio")
        if self.scenario == 3 and (self.ood_train is not None or self.ood_dev is not None):
            raise ConfigurationError("escenario 3: no admite corpus fuera de dominio")
        if self.scenario in (1, 2) and self.ood_train is None:
            raise ConfigurationError(f"escenario {self.scenario}: falta el corpus fuera de dominio")
        if self.scenario in (2, 3) and self.in_train is None:
            raise ConfigurationError(f"escenario {self.scenario}: falta el corpus de entrenamiento del dominio")


@dataclass
class ScenarioResult:
    spec: ScenarioSpec
    checkpoint: object
    baseline: object
    traces: dict
    reports: list
    comparisons: list
    best: str
    update_times: list
    effective_scenario: int


def _load(paths):
    if paths is None:
        return []
    src, tgt = paths
    return list(load_parallel(src, tgt))


def _load_corpora(spec):
    if spec.toy_kind is not None:
        task = generate_toy_task(spec.toy_kind, spec.toy_train, spec.toy_test, vocab_size=spec.toy_vocab,
                                 max_len=spec.toy_max_len, seed=spec.seed, domain_shift=spec.domain_shift)
        n_in = spec.toy_train if spec.toy_in_train is None else spec.toy_in_train
        corpora = {'ood_train': task.ood_train, 'ood_dev': task.ood_dev,
                   'in_train': task.train[:n_in], 'in_dev': task.dev, 'test': task.test}
        if spec.scenario == 1:
            corpora['in_train'], corpora['in_dev'] = [], []
        if spec.scenario == 3:
            corpora['ood_train'], corpora['ood_dev'] = [], []
        return corpora
    corpora = {name: _load(getattr(spec, name)) for name in ('ood_train', 'ood_dev', 'in_train', 'in_dev', 'test')}
    if not corpora['test']:
        raise CorpusError("el corpus de prueba está vacío")
    return corpora


def split_dev(train, dev, name):
    """Sin corpus de desarrollo se reserva el 10% final del entrenamiento."""
    if dev:
        return train, dev
    if len(train) < 2:
        raise ConfigurationError(f"{name}: no hay datos suficientes para reservar un conjunto de desarrollo")
    held = max(1, len(train) // 10)
    logger.info("%s: sin corpus de desarrollo; se reservan %d pares del entrenamiento", name, held)
    return train[:-held], train[-held:]


def run_scenario(spec, out_dir=None):
    """
    Ejecuta el escenario completo: preentrenamiento, ajuste fino (escenario 2),
    sesión congelada de referencia y una sesión en línea por optimizador.
    """
    corpora = _load_corpora(spec)
    effective = spec.scenario
    if spec.scenario == 2 and not corpora['in_train']:
        logger.warning("escenario 2 sin datos de entrenamiento del dominio: se ejecuta como escenario 1")
        effective = 1
    if effective in (1, 2) and not corpora['ood_train']:
        raise ConfigurationError(f"escenario {spec.scenario}: el corpus fuera de dominio está vacío")
    if effective == 3 and not corpora['in_train']:
        raise ConfigurationError("escenario 3: el corpus de entrenamiento del dominio está vacío")

    stages = []
    if effective in (1, 2):
        train, dev = split_dev(corpora['ood_train'], corpora['ood_dev'], 'fuera de dominio')
        stages.append(('fuera de dominio', train, dev))
    if effective in (2, 3):
        train, dev = split_dev(corpora['in_train'], corpora['in_dev'], 'dominio')
        stages.append(('dominio', train, dev))

    training_text = [p for _, train, _ in stages for p in train]
    merges = None
    if spec.bpe_merges:
        merges = learn_bpe([p.src_text for p in training_text] + [p.tgt_text for p in training_text],
                           spec.bpe_merges)
    pipeline = TextPipeline.build(training_text, spec.vocab_size, merges)
    overrides = dict(spec.model_overrides)
    overrides.setdefault('seed', spec.seed)
    model_config = ModelConfig.from_settings(len(pipeline.src_vocab), len(pipeline.tgt_vocab), **overrides)

    checkpoint = None
    for name, train, dev in stages:
        logger.info("entrenamiento offline (%s): %d pares, %d de desarrollo", name, len(train), len(dev))
        checkpoint = train_offline(model_config, pipeline.encode_pairs(train), pipeline.encode_pairs(dev),
                                   spec.training, init=checkpoint, pipeline=pipeline)

    out_dir = Path(out_dir) if out_dir else None
    if out_dir is not None:
        checkpoint.save(out_dir / 'checkpoint.npz')

    test = pipeline.encode_pairs(corpora['test'])

    def trace_path(name):
        return out_dir / 'traces' / f"{name}.jsonl" if out_dir is not None else None

    baseline = run_online_session(checkpoint, test, OptimizerSpec.from_settings('none'), pipeline,
                                  trace_path=trace_path(BASELINE_NAME), beam_size=spec.beam_size,
                                  name=BASELINE_NAME)
    traces = {}
    for optimizer in spec.optimizers:
        traces[optimizer.name] = run_online_session(checkpoint, test, optimizer, pipeline,
                                                    trace_path=trace_path(optimizer.name),
                                                    beam_size=spec.beam_size, name=optimizer.name)

    reports = [evaluate(t.hypotheses, t.references, t.name, spec.bootstrap_samples, spec.seed)
               for t in [baseline] + list(traces.values())]
    comparisons, best = compare_systems(reports[0], reports[1:])
    update_times = [measure_update_time(t) for t in traces.values()]
    result = ScenarioResult(spec, checkpoint, baseline, traces, reports, comparisons, best,
                            update_times, effective)

    if out_dir is not None:
        (out_dir / 'report.txt').write_text(scenario_report(result) + "\n", encoding='utf-8')
        (out_dir / 'report.jsonl').write_text(render_jsonl(reports, comparisons) + "\n", encoding='utf-8')
        (out_dir / 'update_times.json').write_text(
            json.dumps([u.to_dict() for u in update_times], indent=2) + "\n", encoding='utf-8')
        if traces:
            write_plot_data(out_dir / 'plot_data.tsv', emit_trajectory_plot_data(baseline, traces.values()))
    return result


def scenario_report(result):
    """Tabla offline vs. en línea con el mejor algoritmo y los tiempos de actualización."""
    title = f"Escenario {result.spec.scenario}"
    if result.effective_scenario != result.spec.scenario:
        title += f" (ejecutado como escenario {result.effective_scenario})"
    lines = [title, render_text(result.reports, result.comparisons, result.best)]
    if result.update_times:
        lines.append("Tiempo de actualización:")
        lines.extend("  " + u.render() for u in result.update_times)
    return "\n".join(lines)
