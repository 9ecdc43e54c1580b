from django.conf import settings

from apps.corpus.pipeline import TextPipeline
from apps.corpus.reader import load_parallel, write_lines
from apps.reportes.informe import evaluate, render_jsonl, render_text
from apps.simulacion.resultados import measure_update_time
from apps.simulacion.session import run_online_session
from apps.traduccion.checkpoint import Checkpoint
from config.commands import WorkbenchCommand, add_optimizer_arguments, optimizer_schema, optimizer_spec


class Command(WorkbenchCommand):
    help = 'Simula la post-edición en línea sobre un conjunto de prueba con un optimizador.'
    path_keys = ('checkpoint', 'test_src', 'test_tgt')
    required = ('checkpoint', 'test_src', 'test_tgt', 'optimizer')

    def schema(self):
        schema = {
            'checkpoint': ('str', None),
            'test_src': ('str', None),
            'test_tgt': ('str', None),
            'beam_size': ('int', None),
            'name': ('str', None),
            'bootstrap_samples': ('int', settings.METRIC_DEFAULTS['bootstrap_samples']),
        }
        schema.update(optimizer_schema())
        return schema

    def add_command_arguments(self, parser):
        parser.add_argument('--checkpoint')
        parser.add_argument('--test-src')
        parser.add_argument('--test-tgt')
        parser.add_argument('--beam-size', type=int)
        parser.add_argument('--name', help='nombre de la traza (por defecto el del optimizador)')
        parser.add_argument('--bootstrap-samples', type=int)
        add_optimizer_arguments(parser)

    def run(self, values, out_dir):
        checkpoint = Checkpoint.load(values['checkpoint'])
        pipeline = TextPipeline.from_checkpoint(checkpoint)
        test = pipeline.encode_pairs(load_parallel(values['test_src'], values['test_tgt']))
        spec = optimizer_spec(values['optimizer'], values)
        name = values['name'] or spec.name
        trace = run_online_session(checkpoint, test, spec, pipeline, trace_path=out_dir / 'traces' / f"{name}.jsonl",
                                   beam_size=values['beam_size'], name=name)
        write_lines(out_dir / 'translations.txt', trace.hypotheses)

        report = evaluate(trace.hypotheses, trace.references, name, values['bootstrap_samples'], values['seed'])
        timing = measure_update_time(trace)
        text = render_text([report]) + "\n" + timing.render()
        (out_dir / 'report.txt').write_text(text + "\n", encoding='utf-8')
        (out_dir / 'report.jsonl').write_text(render_jsonl([report]) + "\n", encoding='utf-8')
        self.emit(text)
        return {'optimizer': spec.to_dict(), 'sentences': len(trace), 'bleu': report.bleu, 'ter': report.ter}
