from django.conf import settings

from apps.corpus.reader import read_lines
from apps.reportes import bleu as bleu_metric
from apps.reportes import ter as ter_metric
from apps.reportes.bootstrap import bootstrap_ci
from apps.reportes.informe import evaluate, render_jsonl, render_text
from apps.subpalabras.tokenizer import detokenize, tokenize
from config.commands import WorkbenchCommand

METRIC_CHOICES = ('bleu', 'ter', 'wer', 'all')


def _normalized(path):
    return [detokenize(tokenize(text)) for _, text in read_lines(path)]


class Command(WorkbenchCommand):
    help = 'Evalúa hipótesis contra referencias (BLEU, TER, WER) con intervalos bootstrap del 95%.'
    path_keys = ('hyp', 'ref')
    required = ('hyp', 'ref')

    def schema(self):
        return {
            'hyp': ('str', None),
            'ref': ('str', None),
            'metric': ('str', 'all'),
            'bootstrap_samples': ('int', settings.METRIC_DEFAULTS['bootstrap_samples']),
            'name': ('str', 'system'),
        }

    def add_command_arguments(self, parser):
        parser.add_argument('--hyp', help='hipótesis, una por línea')
        parser.add_argument('--ref', help='referencias, una por línea')
        parser.add_argument('--metric', choices=METRIC_CHOICES)
        parser.add_argument('--bootstrap-samples', type=int)
        parser.add_argument('--name')

    def run(self, values, out_dir):
        hyps, refs = _normalized(values['hyp']), _normalized(values['ref'])
        samples, seed = values['bootstrap_samples'], values['seed']
        metric = values['metric']
        if metric == 'all':
            report = evaluate(hyps, refs, values['name'], samples, seed)
            text = render_text([report])
            (out_dir / 'report.txt').write_text(text + "\n", encoding='utf-8')
            (out_dir / 'report.jsonl').write_text(render_jsonl([report]) + "\n", encoding='utf-8')
            self.emit(text)
            return report.to_dict()

        if metric == 'bleu':
            stats = bleu_metric.corpus_stats(hyps, refs)
        else:
            stats = ter_metric.corpus_stats(hyps, refs, shifts=metric == 'ter')
        point, low, high = bootstrap_ci(stats, samples, seed, metric='bleu' if metric == 'bleu' else 'ter')
        line = f"{metric.upper()} {point:.1f} (IC 95%: {low:.1f}-{high:.1f}, n={len(stats)})"
        (out_dir / 'report.txt').write_text(line + "\n", encoding='utf-8')
        self.emit(line)
        return {'metric': metric, 'score': point, 'low': low, 'high': high}
