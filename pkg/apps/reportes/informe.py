"""Reportes de evaluación: BLEU y TER con intervalos, comparación entre sistemas."""

import json
import logging
from dataclasses import asdict, dataclass

from django.conf import settings

from . import bleu as bleu_metric
from . import ter as ter_metric
from .bootstrap import bootstrap_ci

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class EvalReport:
    name: str
    n_sentences: int
    bleu: float
    bleu_low: float
    bleu_high: float
    ter: float
    ter_low: float
    ter_high: float

    @property
    def bleu_half_width(self):
        return (self.bleu_high - self.bleu_low) / 2.0

    @property
    def ter_half_width(self):
        return (self.ter_high - self.ter_low) / 2.0

    def to_dict(self):
        data = asdict(self)
        data['bleu_half_width'] = self.bleu_half_width
        data['ter_half_width'] = self.ter_half_width
        return data


def evaluate(hyps, refs, name='system', n_resamples=None, seed=0):
    """EvalReport con intervalos bootstrap del 95% para BLEU y TER."""
    n_resamples = n_resamples or settings.METRIC_DEFAULTS['bootstrap_samples']
    bleu_stats = bleu_metric.corpus_stats(hyps, refs)
    ter_stats = ter_metric.corpus_stats(hyps, refs)
    b, b_low, b_high = bootstrap_ci(bleu_stats, n_resamples, seed, metric='bleu')
    t, t_low, t_high = bootstrap_ci(ter_stats, n_resamples, seed, metric='ter')
    report = EvalReport(name, len(bleu_stats), b, b_low, b_high, t, t_low, t_high)
    logger.info("%s: BLEU %.1f ± %.1f, TER %.1f ± %.1f (%d oraciones)", name, report.bleu,
                report.bleu_half_width, report.ter, report.ter_half_width, report.n_sentences)
    return report


@dataclass(frozen=True)
class SystemComparison:
    name: str
    bleu_delta: float
    ter_delta: float
    relative_ter_reduction: float
    bleu_significant: bool
    ter_significant: bool


def compare_systems(baseline, systems):
    """
    Compara cada sistema contra la línea base.

    Una mejora se marca como significativa cuando los intervalos del 95% no se
    solapan en la dirección de la mejora. El mejor sistema es el de menor TER
    (desempate por mayor BLEU). Devuelve (comparaciones, nombre del mejor).
    """
    comparisons = []
    for report in systems:
        reduction = 100.0 * (baseline.ter - report.ter) / baseline.ter if baseline.ter > 0 else 0.0
        comparisons.append(SystemComparison(
            name=report.name,
            bleu_delta=report.bleu - baseline.bleu,
            ter_delta=report.ter - baseline.ter,
            relative_ter_reduction=reduction,
            bleu_significant=report.bleu_low > baseline.bleu_high,
            ter_significant=report.ter_high < baseline.ter_low,
        ))
    best = min(systems, key=lambda r: (r.ter, -r.bleu)).name if systems else None
    return comparisons, best


def render_text(reports, comparisons=(), best=None):
    """Tabla alineada en texto plano; '*' marca las mejoras significativas."""
    marks = {c.name: c for c in comparisons}
    width = max([len('sistema')] + [len(r.name) for r in reports])
    lines = [f"{'sistema':<{width}}  {'BLEU':>14}  {'TER':>14}  {'n':>6}"]
    for r in reports:
        c = marks.get(r.name)
        b_mark = '*' if c and c.bleu_significant else ' '
        t_mark = '*' if c and c.ter_significant else ' '
        line = (f"{r.name:<{width}}  {r.bleu:6.1f} ± {r.bleu_half_width:4.1f}{b_mark}"
                f"  {r.ter:6.1f} ± {r.ter_half_width:4.1f}{t_mark}  {r.n_sentences:>6d}")
        if r.name == best:
            line += '  (mejor)'
        lines.append(line)
    for c in comparisons:
        lines.append(f"{c.name}: ΔBLEU {c.bleu_delta:+.1f}, ΔTER {c.ter_delta:+.1f}, "
                     f"reducción relativa de TER {c.relative_ter_reduction:.1f}%")
    return "\n".join(lines)


def render_jsonl(reports, comparisons=()):
    records = [dict(r.to_dict(), kind='report') for r in reports]
    records += [dict(asdict(c), kind='comparison') for c in comparisons]
    return "\n".join(json.dumps(record, ensure_ascii=False) for record in records)
