"""Trazas de sesiones en línea: un registro JSON por oración."""

import json
import logging
from dataclasses import asdict, dataclass, field
from pathlib import Path

from config.exceptions import CorpusError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TraceRecord:
    index: int
    src: str
    hyp: str
    hyp_log_prob: float
    ref: str
    cum_bleu: float
    cum_ter: float
    status: str
    loss: float = 0.0
    inner_iterations: int = 0
    update_ms: float = 0.0
    truncated: bool = False


@dataclass
class SimulationTrace:
    name: str
    optimizer: str
    records: list = field(default_factory=list)

    def __len__(self):
        return len(self.records)

    @property
    def hypotheses(self):
        return [r.hyp for r in self.records]

    @property
    def references(self):
        return [r.ref for r in self.records]

    def header(self):
        return {'kind': 'header', 'name': self.name, 'optimizer': self.optimizer}


class TraceWriter:
    """Escribe la cabecera al abrir y agrega una línea por registro (flush inmediato)."""

    def __init__(self, path, trace):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = open(self.path, 'w', encoding='utf-8')
        self._write(trace.header())

    def _write(self, data):
        self._fh.write(json.dumps(data, ensure_ascii=False) + "\n")
        self._fh.flush()

    def append(self, record):
        self._write(dict(asdict(record), kind='record'))

    def close(self):
        self._fh.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def load_trace(path):
    trace = None
    with open(path, encoding='utf-8') as fh:
        for line_number, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                data = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CorpusError(f"{path}:{line_number}: registro de traza inválido ({exc.msg})")
            kind = data.pop('kind', 'record')
            if kind == 'header':
                trace = SimulationTrace(data['name'], data['optimizer'])
            elif trace is None:
                raise CorpusError(f"{path}: la traza no empieza con una cabecera")
            else:
                trace.records.append(TraceRecord(**data))
    if trace is None:
        raise CorpusError(f"{path}: traza vacía")
    return trace
