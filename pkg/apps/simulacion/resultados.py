import csv
import logging
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
from django.conf import settings

from apps.reportes.bleu import bleu
from config.exceptions import MetricError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class UpdateTimeSummary:
    name: str
    n: int
    mean_ms: float
    p95_ms: float
    min_ms: float
    max_ms: float
    reference_ms: float

    def to_dict(self):
        return asdict(self)

    def render(self):
        return (f"{self.name}: media {self.mean_ms:.1f} ms, p95 {self.p95_ms:.1f} ms "
                f"(mín {self.min_ms:.1f}, máx {self.max_ms:.1f}; referencia GPU {self.reference_ms:.0f} ms)")


def measure_update_time(trace):
    """Estadísticas del tiempo de actualización (sin el tiempo de traducción)."""
    if not len(trace):
        raise MetricError(f"{trace.name}: traza vacía, no hay tiempos que medir")
    times = np.array([r.update_ms for r in trace.records], dtype=np.float64)
    return UpdateTimeSummary(
        name=trace.name,
        n=len(times),
        mean_ms=float(times.mean()),
        p95_ms=float(np.percentile(times, 95)),
        min_ms=float(times.min()),
        max_ms=float(times.max()),
        reference_ms=settings.REFERENCE_UPDATE_TIME_MS,
    )


def emit_trajectory_plot_data(baseline, traces):
    """
    Serie por oración de BLEU acumulado (en línea) − BLEU acumulado (base),
    una columna por traza. Los puntos intermedios usan el BLEU acumulado
    suavizado de cada registro; el último es la diferencia de BLEU de corpus
    sin suavizar, la misma que se reporta al final.
    """
    traces = list(traces)
    if not traces:
        raise MetricError("se necesita al menos una traza en línea")
    for trace in traces:
        if len(trace) != len(baseline) or trace.references != baseline.references:
            raise MetricError(
                f"la traza {trace.name} no cubre el mismo conjunto de prueba que {baseline.name}"
            )
    base = np.array([r.cum_bleu for r in baseline.records])
    final_base = bleu(baseline.hypotheses, baseline.references)
    series = {}
    for trace in traces:
        values = np.array([r.cum_bleu for r in trace.records]) - base
        values[-1] = bleu(trace.hypotheses, trace.references) - final_base
        series[trace.name] = values.tolist()
    return series


def tail_bleu_gain(baseline, trace, tail=250):
    """BLEU (sin suavizar) de las últimas `tail` oraciones: en línea − base."""
    if len(trace) != len(baseline) or trace.references != baseline.references:
        raise MetricError(f"la traza {trace.name} no cubre el mismo conjunto de prueba que {baseline.name}")
    if tail < 1:
        raise ValueError(f"tail debe ser >= 1, se recibió {tail}")
    refs = trace.references[-tail:]
    return bleu(trace.hypotheses[-tail:], refs) - bleu(baseline.hypotheses[-tail:], refs)


def adaptation_margin(improvements):
    """
    Umbral de mejora a partir de corridas de referencia con semillas fijas:
    la mejora mínima menos una desviación estándar muestral.
    """
    values = np.asarray(list(improvements), dtype=np.float64)
    if values.size < 2:
        raise MetricError(f"se necesitan al menos dos corridas de referencia, hay {values.size}")
    return float(values.min() - values.std(ddof=1))


def write_plot_data(path, series):
    """TSV: columna n y una columna por sistema."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    names = list(series)
    length = len(series[names[0]]) if names else 0
    with open(path, 'w', encoding='utf-8', newline='') as fh:
        writer = csv.writer(fh, delimiter='\t', lineterminator='\n')
        writer.writerow(['n'] + names)
        for i in range(length):
            writer.writerow([i + 1] + [f"{series[name][i]:.6f}" for name in names])
    logger.info("datos de trayectoria escritos en %s (%d filas)", path, length)
    return path
