"""Lectura en streaming de corpus paralelos (una oración por línea, UTF-8)."""

import logging
from dataclasses import dataclass
from itertools import zip_longest

from config.exceptions import CorpusError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SentencePair:
    """
    Par fuente/destino. El texto original se conserva para los reportes; los
    índices se llenan al pasar por un TextPipeline.
    """
    src_text: str
    tgt_text: str
    src: tuple = ()
    tgt: tuple = ()


def read_lines(path):
    """Genera (número de línea, texto sin salto de línea)."""
    try:
        with open(path, 'rb') as fh:
            for line_number, raw in enumerate(fh, start=1):
                try:
                    yield line_number, raw.decode('utf-8').rstrip('\r\n')
                except UnicodeDecodeError as exc:
                    raise CorpusError(f"{path}:{line_number}: bytes no válidos en UTF-8 ({exc.reason})")
    except FileNotFoundError:
        raise CorpusError(f"no existe el archivo {path}")


class ParallelReader:
    """
    Iterable de SentencePair. Los pares con algún lado vacío se descartan y se
    cuentan en `dropped`; si los archivos tienen distinto número de líneas se
    lanza CorpusError al llegar al final ("n_tgt != n_src").
    """

    def __init__(self, src_path, tgt_path):
        self.src_path = src_path
        self.tgt_path = tgt_path
        self.dropped = 0
        self.read = 0

    def __iter__(self):
        self.dropped = self.read = 0
        n_src = n_tgt = 0
        for src_line, tgt_line in zip_longest(read_lines(self.src_path), read_lines(self.tgt_path)):
            if src_line is not None:
                n_src += 1
            if tgt_line is not None:
                n_tgt += 1
            if src_line is None or tgt_line is None:
                continue
            src, tgt = src_line[1].strip(), tgt_line[1].strip()
            if not src or not tgt:
                self.dropped += 1
                continue
            self.read += 1
            yield SentencePair(src, tgt)
        if n_src != n_tgt:
            raise CorpusError(
                f"número de líneas distinto entre {self.tgt_path} y {self.src_path}: {n_tgt} != {n_src}"
            )
        if self.dropped:
            logger.info("%s: %d pares descartados por tener un lado vacío", self.src_path, self.dropped)


def load_parallel(src_path, tgt_path):
    return ParallelReader(src_path, tgt_path)


def write_lines(path, lines):
    with open(path, 'w', encoding='utf-8') as fh:
        for line in lines:
            fh.write(f"{line}\n")
