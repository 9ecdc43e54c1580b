from apps.simulacion.resultados import emit_trajectory_plot_data, write_plot_data
from apps.simulacion.trace import load_trace
from config.commands import WorkbenchCommand


class Command(WorkbenchCommand):
    help = 'Serie por oración de BLEU acumulado (en línea − línea base), una columna por traza, en TSV.'
    path_keys = ('baseline', 'traces', 'output')
    required = ('baseline', 'traces')

    def schema(self):
        return {'baseline': ('str', None), 'traces': ('list', None), 'output': ('str', None)}

    def add_command_arguments(self, parser):
        parser.add_argument('--baseline', help='traza de la sesión congelada')
        parser.add_argument('--traces', nargs='+', help='trazas en línea')
        parser.add_argument('--output', help='por defecto <out-dir>/plot_data.tsv')

    def run(self, values, out_dir):
        baseline = load_trace(values['baseline'])
        series = emit_trajectory_plot_data(baseline, [load_trace(path) for path in values['traces']])
        output = write_plot_data(values['output'] or out_dir / 'plot_data.tsv', series)
        self.emit(f"{len(series)} series → {output}")
        return {'series': list(series)}
