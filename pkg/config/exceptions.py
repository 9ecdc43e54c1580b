class WorkbenchError(Exception):
    """Error base del banco de pruebas. Los comandos lo convierten en CommandError."""


class DimensionError(WorkbenchError):
    """Las formas de los operandos no encajan para la operación."""

    def __init__(self, op, shape_a, shape_b=None):
        self.op = op
        self.shapes = (tuple(shape_a), None if shape_b is None else tuple(shape_b))
        if shape_b is None:
            message = f"{op}: forma inválida {tuple(shape_a)}"
        else:
            message = f"{op}: formas incompatibles {tuple(shape_a)} y {tuple(shape_b)}"
        super().__init__(message)


class GraphError(WorkbenchError):
    """Pérdida no escalar o tensor que no pertenece al grafo."""


class VocabularyError(WorkbenchError):
    """Índice fuera del vocabulario."""

    def __init__(self, index, size, side='target', message=None):
        self.index = index
        self.size = size
        super().__init__(message or f"índice {index} fuera del vocabulario {side} (tamaño {size})")


class CheckpointError(WorkbenchError):
    """Checkpoint con versión o formas que no corresponden."""


class CorpusError(WorkbenchError):
    """Archivos de corpus inválidos."""


class MetricError(WorkbenchError):
    """Entradas inválidas para una métrica."""


class ConfigurationError(WorkbenchError):
    """Configuración inconsistente (escenario, optimizador, flags)."""
