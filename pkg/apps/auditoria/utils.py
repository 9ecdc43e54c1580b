import json
import logging
from pathlib import Path

from django.conf import settings
from django.utils import timezone

logger = logging.getLogger(__name__)

BITACORA_NAME = 'bitacora.jsonl'


def log_action(accion, objeto=None, extra=None, out_dir=None):
    """
    Registra una acción en la bitácora del directorio de salida.

    Cada registro es una línea JSON con accion, objeto, extra, timestamp y la
    versión del banco. Un fallo al escribir se informa y nunca aborta la
    ejecución.
    """
    registro = {
        'timestamp': timezone.now().isoformat(),
        'accion': accion,
        'objeto': None if objeto is None else str(objeto),
        'extra': extra,
        'version': settings.WORKBENCH_VERSION,
    }
    logger.info("%s%s", accion, f" [{objeto}]" if objeto is not None else "")
    try:
        directory = Path(out_dir) if out_dir is not None else Path(settings.WORKBENCH_OUT_DIR)
        directory.mkdir(parents=True, exist_ok=True)
        with open(directory / BITACORA_NAME, 'a', encoding='utf-8') as fh:
            fh.write(json.dumps(registro, ensure_ascii=False, default=str) + "\n")
    except Exception as e:
        logger.error("Error al registrar en bitácora: %s", e)
        return None
    return registro


def read_bitacora(out_dir):
    path = Path(out_dir) / BITACORA_NAME
    if not path.exists():
        return []
    with open(path, encoding='utf-8') as fh:
        return [json.loads(line) for line in fh if line.strip()]
